#include "grok/tensor.hpp"

#include <atomic>

namespace grok::nn {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

long next_node_id() {
  static std::atomic<long> counter{0};
  return ++counter;
}

}  // namespace detail

}  // namespace grok::nn
