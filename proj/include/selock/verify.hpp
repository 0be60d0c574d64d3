#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace selock {

struct CriterionResult {
    std::string id;       // A1..A10
    std::string name;
    bool passed = false;
    std::string detail;   // measured values
    double seconds = 0.0;

    nlohmann::json to_json() const;
};

struct VerifyReport {
    std::string suite;
    std::vector<CriterionResult> results;

    bool passed() const;
    nlohmann::json to_json() const;
};

// Suites: core = {A1, A2, A3, A10}, theory = {A4, A6, A7},
// arew = {A3, A8, A9}, all = everything including A5.
VerifyReport run_suite(const std::string& suite);

CriterionResult check_exactness();            // A1
CriterionResult check_gradient_oracle();      // A2
CriterionResult check_lambda_zero();          // A3
CriterionResult check_enumeration_oracle();   // A4
CriterionResult check_self_locking();         // A5
CriterionResult check_locking_drift();        // A6
CriterionResult check_observations();         // A7
CriterionResult check_accuracy_curve();       // A8
CriterionResult check_robustness();           // A9
CriterionResult check_baseline_algebra();     // A10

}  // namespace selock
