#include "hydroens/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace hydroens {

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
    return fnv1a(std::as_bytes(std::span(text.data(), text.size())), seed);
}

std::uint64_t fnv1a(const Eigen::Ref<const Eigen::MatrixXd>& m, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, j);
            h = fnv1a(std::as_bytes(std::span(&v, 1)), h);
        }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view name) {
    std::uint64_t z = root ^ fnv1a(name);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

}  // namespace hydroens
