// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_LOG_HPP
#define PROSODET_LOG_HPP

#include <cstdio>
#include <string>

namespace prosodet {

inline void log_info(const std::string& msg) {
  std::fprintf(stderr, "[prosodet] %s\n", msg.c_str());
}

inline void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[prosodet] WARNING: %s\n", msg.c_str());
}

}  // namespace prosodet

#endif  // PROSODET_LOG_HPP
