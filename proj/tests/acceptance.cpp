// Acceptance gate: runs all nine primary criteria at their stated tolerances
// and prints exactly one PASS/FAIL line per criterion.

#include <filesystem>
#include <iostream>

#include "cuspflow/verify.hpp"

int main() {
    using namespace cuspflow;
    RunConfig cfg = RunConfig::from_json(nlohmann::json::object());
    VerifyContext ctx(cfg);

    std::filesystem::path work = std::filesystem::temp_directory_path() / "cuspflow_acceptance";
    std::filesystem::remove_all(work);
    auto results = run_all_criteria(ctx, CUSPFLOW_CLI_PATH, work);

    bool pass = true;
    for (const auto& r : results) {
        pass = pass && r.pass;
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.name << std::endl;
        if (!r.pass)
            for (const auto& c : r.checks)
                if (!c.pass) std::cout << "         failing check: " << c.to_json().dump() << std::endl;
    }
    std::cout << (pass ? "ACCEPTANCE: ALL 9 CRITERIA PASS" : "ACCEPTANCE: FAILURES PRESENT") << std::endl;
    return pass ? 0 : 1;
}
