#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

#include "eyring/kramers.hpp"
#include "eyring/montecarlo.hpp"
#include "eyring/pde2d.hpp"
#include "eyring/wellspec.hpp"

namespace eyring {

using Json = nlohmann::ordered_json;

/// Malformed or schema-violating problem file.
class ProblemFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and validates a problem document. Unknown keys are rejected.
ProblemSpec parse_problem(std::string_view text);
ProblemSpec load_problem(const std::string& path);

/// FNV-1a 64-bit digest of the input bytes, as 16 hex digits.
std::string input_hash(std::string_view bytes);

Json to_json(const Point& x);
Json to_json(const AssumptionReport& report);
Json to_json(const SaddleSet& set);
Json to_json(const PrefactorReport& report);
Json to_json(const MCResult& result, bool include_times = false);
Json to_json(const KSResult& ks);
Json summary_json(const GridSolution& solution);
Json to_json(const EigenEstimate& estimate);

}  // namespace eyring
