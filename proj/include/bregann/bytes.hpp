#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "bregann/errors.hpp"

namespace bregann::bytes {

// Little-endian encoding independent of host byte order.
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }
inline void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

template <class T>
void put_array(std::vector<std::uint8_t>& out, const std::vector<T>& v) {
    put_u64(out, v.size());
    for (const T& x : v) {
        if constexpr (std::is_same_v<T, double>)
            put_f64(out, x);
        else if constexpr (sizeof(T) == 8)
            put_u64(out, static_cast<std::uint64_t>(x));
        else if constexpr (sizeof(T) == 4)
            put_u32(out, static_cast<std::uint32_t>(x));
        else
            out.push_back(static_cast<std::uint8_t>(x));
    }
}

class Reader {
public:
    Reader(const std::uint8_t*& p, const std::uint8_t* end) : p_(p), end_(end) {}

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end_ - p_) < n) throw FormatError("truncated index data");
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
        p_ += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
        p_ += 4;
        return v;
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(p_[0] | (p_[1] << 8));
        p_ += 2;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return *p_++;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    template <class T>
    std::vector<T> array() {
        const std::uint64_t n = u64();
        const std::size_t width = std::is_same_v<T, double> ? 8 : sizeof(T);
        if (n > static_cast<std::uint64_t>(end_ - p_) / width) throw FormatError("array length exceeds data");
        std::vector<T> v(n);
        for (auto& x : v) {
            if constexpr (std::is_same_v<T, double>)
                x = f64();
            else if constexpr (sizeof(T) == 8)
                x = static_cast<T>(u64());
            else if constexpr (sizeof(T) == 4)
                x = static_cast<T>(u32());
            else
                x = static_cast<T>(u8());
        }
        return v;
    }

private:
    const std::uint8_t*& p_;
    const std::uint8_t* end_;
};

}  // namespace bregann::bytes
