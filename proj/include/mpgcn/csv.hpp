#pragma once

#include <array>
#include <charconv>
#include <stdexcept>
#include <string>

namespace mpgcn {

/// Shortest decimal representation that round-trips the exact double, so
/// repeated runs can be diffed byte for byte.
inline std::string format_double(double v) {
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

} // namespace mpgcn
