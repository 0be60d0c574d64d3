#include <algorithm>
#include <cstdio>

#include "selock/verify.hpp"

// Runs every acceptance criterion and prints one line per result.
int main() {
    selock::VerifyReport report = selock::run_suite("all");
    for (const auto& r : report.results) {
        std::printf("%s %s %s [%s] (%.1fs)\n", r.id.c_str(), r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.detail.c_str(), r.seconds);
    }
    std::printf("%zu/%zu criteria passed\n",
                static_cast<size_t>(std::count_if(report.results.begin(), report.results.end(),
                                                  [](const auto& r) { return r.passed; })),
                report.results.size());
    return report.passed() ? 0 : 1;
}
