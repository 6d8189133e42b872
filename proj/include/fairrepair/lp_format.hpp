#pragma once

#include "fairrepair/milp.hpp"

#include <filesystem>
#include <string>

namespace fairrepair {

// CPLEX-LP text: Minimize / Subject To / Bounds / Binaries / End.
// Reals are written with 17 significant digits; variable names are the
// problem's names.
std::string lp_to_text(const MilpProblem& problem);
void export_lp_file(const MilpProblem& problem, const std::filesystem::path& path);

// Reads the subset of the format produced by lp_to_text (plus Maximize,
// Generals-free files and the usual sense spellings). Variables are numbered
// in order of first appearance. Role tags are not stored in the file.
MilpProblem lp_from_text(const std::string& text);
MilpProblem read_lp_file(const std::filesystem::path& path);

}  // namespace fairrepair
