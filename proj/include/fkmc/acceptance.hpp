// The acceptance gate: eleven checks covering kernel conventions, bridge
// marginals, constant-potential exactness, box-count dimension, shell
// occupation against the quadrature oracle, small-deviation fractions,
// functional growth under truncation release, crossing-mass decay, the
// convolution finiteness verdicts, hitting exponents, and byte-level
// determinism.  Each check prints one PASS/FAIL line with the measured
// value, target and tolerance.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace fkmc {

struct AcceptanceOptions {
    std::string tier = "fast";  // "fast" (smoke sizes) or "full" (gate sizes)
    uint64_t seed = 20260801;
    std::string out_dir;  // when set, per-check CSV artifacts are written here
};

// Returns the number of failed checks (0 = all pass).
int acceptance_suite(const AcceptanceOptions& opts, std::ostream& log);

}  // namespace fkmc
