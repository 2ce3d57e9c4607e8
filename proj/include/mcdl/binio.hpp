#pragma once

// Little helpers for the checkpoint byte stream. Values are written in host
// byte order; checkpoints are not meant to move between architectures.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "mcdl/error.hpp"

namespace mcdl::binio {

template <typename T>
    requires std::is_trivially_copyable_v<T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
    requires std::is_trivially_copyable_v<T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError("truncated binary stream");
    return v;
}

inline void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> get_doubles(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    if (n > (std::uint64_t{1} << 32)) throw FormatError("implausible vector length in binary stream");
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw FormatError("truncated binary stream");
    return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
    put<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    if (n > (std::uint64_t{1} << 30)) throw FormatError("implausible string length in binary stream");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw FormatError("truncated binary stream");
    return s;
}

}  // namespace mcdl::binio
