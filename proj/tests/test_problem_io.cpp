#include "doctest.h"

#include <cmath>
#include <string>

#include "eyring/problem_io.hpp"
#include "support/fixtures.hpp"

using namespace eyring;

namespace {

const std::string problems = EYRING_PROBLEMS_DIR;

std::string minimal(const std::string& extra = "") {
    return R"json({"dimension": 1, "f": "x1^2/2", "ell": ["0"],
               "domain": {"type": "implicit", "g": "(x1+1)*(x1-2)", "bbox": [[-1, 2]]},
               "witness": [0])json" +
           extra + "}";
}

void check_rejected(const std::string& text, const std::string& fragment) {
    try {
        (void)parse_problem(text);
        FAIL("expected ProblemFileError for: " << text);
    } catch (const ProblemFileError& e) {
        INFO(e.what());
        CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
}

}  // namespace

TEST_SUITE("problem_io") {
    TEST_CASE("bundled problems load") {
        for (const char* name : {"disc_plus", "disc_minus", "disc_zero", "interval", "ellipse",
                                 "broken_orthogonality"}) {
            INFO(name);
            const ProblemSpec spec = load_problem(problems + "/" + name + ".json");
            CHECK(spec.dimension >= 1);
            CHECK(spec.ell.size() == spec.dimension);
        }
    }

    TEST_CASE("bundled disc matches the test fixture") {
        const ProblemSpec file = load_problem(problems + "/disc_plus.json");
        const ProblemSpec fixture = testing::worked_disc(1.0);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(structurally_equal(file.ell[i], fixture.ell[i]));
        CHECK(structurally_equal(file.f, fixture.f));
        CHECK(file.domain.bbox().axes == fixture.domain.bbox().axes);
    }

    TEST_CASE("minimal document and options") {
        const ProblemSpec spec = parse_problem(minimal(R"(, "options": {"seed": 9, "eps_x": 1e-8, "eps_proj": 1e-13})"));
        CHECK(spec.options.seed == 9);
        CHECK(spec.options.eps_x == 1e-8);
        CHECK(spec.domain.eps_proj() == 1e-13);
        CHECK(spec.options.samples == SolverOptions{}.samples);
    }

    TEST_CASE("unknown keys are rejected at every level") {
        check_rejected(minimal(R"(, "colour": "red")"), "unknown key 'colour'");
        check_rejected(minimal(R"(, "options": {"sede": 1})"), "unknown key 'sede'");
        check_rejected(R"({"dimension": 2, "f": "x1", "ell": ["0", "0"], "witness": [0, 0],
                          "domain": {"type": "ball", "center": [0, 0], "radius": 1, "r": 2}})",
                       "unknown key 'r'");
    }

    TEST_CASE("schema violations") {
        check_rejected("{", "malformed JSON");
        check_rejected("[1, 2]", "JSON object");
        check_rejected(R"({"dimension": 1})", "missing required key");
        check_rejected(minimal(R"(, "options": {"seed": -1})"), "seed");
        check_rejected(minimal(R"(, "options": {"eps_x": 0})"), "eps_x");
        check_rejected(R"({"dimension": 1, "f": "x2", "ell": ["0"], "witness": [0],
                          "domain": {"type": "ball", "center": [0], "radius": 1}})",
                       "f:");
        check_rejected(R"({"dimension": 1, "f": "x1", "ell": ["0", "0"], "witness": [0],
                          "domain": {"type": "ball", "center": [0], "radius": 1}})",
                       "ell must be an array of 1");
        check_rejected(R"({"dimension": 1, "f": "x1", "ell": ["0"], "witness": [0],
                          "domain": {"type": "cube"}})",
                       "domain.type");
        check_rejected(R"({"dimension": 1, "f": "x1", "ell": ["0"], "witness": [0],
                          "domain": {"type": "implicit", "g": "x1", "bbox": [[1, -1]]}})",
                       "lo < hi");
    }

    TEST_CASE("input hash is FNV-1a 64") {
        CHECK(input_hash("") == "cbf29ce484222325");
        CHECK(input_hash("a") == "af63dc4c8601ec8c");
        CHECK(input_hash("foobar") == "85944171f73967e8");
    }

    TEST_CASE("non-finite numbers serialize as null") {
        MCResult r;
        r.n = 2;
        r.exit_times = {1.0, std::numeric_limits<double>::infinity()};
        const Json j = to_json(r, true);
        CHECK(j["exit_times"][1].is_null());
        CHECK(j["exit_times"][0] == 1.0);
    }

    TEST_CASE("prefactor report carries the documented fields") {
        const Json j = to_json(compute_prefactor(Model(testing::worked_disc(1.0))));
        for (const char* key : {"x0", "det_hess_f_x0", "barrier", "saddles", "kappa0", "kappa0_error",
                                "zeta0", "zeta0_error", "classical_kappa0"})
            CHECK(j.contains(key));
        CHECK(j["saddles"][0]["divergence_integral"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    }
}
