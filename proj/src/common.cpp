#include "grok/common.hpp"

namespace grok {

const char* err_name(Err e) {
  switch (e) {
    case Err::DivisionByZero: return "DivisionByZero";
    case Err::OperandOutOfRange: return "OperandOutOfRange";
    case Err::NoInverse: return "NoInverse";
    case Err::NonAssociativeOp: return "NonAssociativeOp";
    case Err::NotInGroup: return "NotInGroup";
    case Err::NotPrimitiveRoot: return "NotPrimitiveRoot";
    case Err::GcdViolation: return "GcdViolation";
    case Err::NonIntegerDecoding: return "NonIntegerDecoding";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::IndexOutOfRange: return "IndexOutOfRange";
    case Err::NotScalar: return "NotScalar";
    case Err::ConfigError: return "ConfigError";
    case Err::UnknownPrefix: return "UnknownPrefix";
    case Err::VocabMismatch: return "VocabMismatch";
    case Err::ConfigMismatch: return "ConfigMismatch";
    case Err::FileError: return "FileError";
    case Err::TooFewPairs: return "TooFewPairs";
    case Err::NotCommutative: return "NotCommutative";
    case Err::EmptyAfterFilter: return "EmptyAfterFilter";
    case Err::DegenerateData: return "DegenerateData";
    case Err::ConfigParse: return "ConfigParse";
    case Err::EmptyGroup: return "EmptyGroup";
  }
  return "UnknownError";
}

uint64_t hash_bytes(const void* data, size_t n, uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  uint64_t h = hash_bytes(tag.data(), tag.size());
  uint64_t z = seed ^ h;
  // one splitmix64 round to decorrelate nearby seeds
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace grok
