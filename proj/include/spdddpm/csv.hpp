#pragma once

#include <charconv>
#include <string>

#include "spdddpm/errors.hpp"

namespace spdddpm {

/// Shortest decimal form that parses back to the same double ("1", "0.125").
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

}  // namespace spdddpm
