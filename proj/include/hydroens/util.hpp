#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace hydroens {

/// 64-bit FNV-1a over raw bytes; chainable through `seed`.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const Eigen::Ref<const Eigen::MatrixXd>& m, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// Derives a named child seed from a root seed (splitmix64 finalizer over the mixed name hash).
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);

/// Shortest decimal that reads back to the same double, used for every numeric artifact.
std::string format_double(double value);

}  // namespace hydroens
