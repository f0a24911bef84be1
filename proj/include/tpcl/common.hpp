#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tpcl {

using SampleId = std::int64_t;
using TaskId = int;

// Major version stamped into every emitted file. Readers reject other majors.
inline constexpr int kSchemaVersion = 1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, contract violations by the caller.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Integrity failure of a persisted artifact (checksum, version).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits.
std::string to_hex64(std::uint64_t value);

std::string checksum_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Deterministic seed mixing (splitmix64 finalizer over the combined words).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace tpcl
