#ifndef XOVER_VERSION_HPP
#define XOVER_VERSION_HPP

namespace xover {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace xover

#endif  // XOVER_VERSION_HPP
