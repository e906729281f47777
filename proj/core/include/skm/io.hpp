#pragma once

#include <filesystem>
#include <string>

#include "skm/types.hpp"

namespace skm {

/// Parses a problem description of the form
///
///   {"A": [[...], ...], "b": [...], "C": [[...], ...], "d": [...],
///    "y0": [...]}
///
/// "y0" is optional, empty blocks may be written as [].  Throws ParseError
/// on malformed input and ValidationError when the parsed system fails
/// validate().
ConstraintSystem system_from_json(const std::string& text);
std::string to_json(const ConstraintSystem& system);

std::string to_json(const SolveResult& result);

ConstraintSystem load_system(const std::filesystem::path& path);
void save_system(const ConstraintSystem& system, const std::filesystem::path& path);
void save_result(const SolveResult& result, const std::filesystem::path& path);

}  // namespace skm
