#include <gtest/gtest.h>

#include <cmath>

#include "cma/experiment.hpp"
#include "cma/kernels.hpp"

using namespace cma;

namespace {

ParsedConfig bundled(const std::string& name) { return parse_config(*bundled_scenario_text(name)); }

double l1_distance(const GridField& a, const GridField& b) {
    GridField d = a;
    d -= b;
    return lp_norm(d, 1.0);
}

int newton_after_first(const Scenario& sc, bool warm) {
    ContinuationOptions o;
    o.diagnostics = false;
    o.warm_start = warm;
    const auto run = run_continuation(sc, o);
    EXPECT_FALSE(run.failed) << run.error;
    int s = 0;
    for (std::size_t k = 1; k < run.states.size(); ++k) s += run.states[k].newton_steps;
    return s;
}

}  // namespace

TEST(Bundled, LibraryContainsRequiredScenarios) {
    for (const char* name : {"trivial", "smooth-nondegenerate", "smooth-degenerate", "pole-below", "pole-above",
                             "n1-oracle", "n2-manufactured"})
        EXPECT_TRUE(bundled_scenario_text(name).has_value()) << name;
    const auto sd = bundled("smooth-degenerate");
    EXPECT_EQ(sd.scenario.alpha.t, 1.0);
    EXPECT_FALSE(sd.scenario.psi1.has_poles());
    EXPECT_FALSE(sd.scenario.psi2.has_poles());
    const auto above = bundled("pole-above");
    ASSERT_FALSE(above.notes.empty());
    EXPECT_NE(above.notes.front().find("hypothesis (i) at risk"), std::string::npos);
}

TEST(Bundled, RegularizationConvergesInL1) {
    for (const auto& b : bundled_scenarios()) {
        ParseOptions po;
        po.resolution_override = 64;
        po.prepare = false;
        const auto cfg = parse_config(b.text, po);
        const auto& sc = cfg.scenario;
        if (sc.spec.n == 2) continue;
        for (const auto* m : {&sc.psi1, &sc.psi2}) {
            const auto target = evaluate(*m, sc.spec, 0.0);
            double prev = std::numeric_limits<double>::infinity();
            for (double eps : {0.1, 0.03, 0.01, 3e-3, 1e-3}) {
                const double d = l1_distance(regularize(*m, sc.spec, eps), target);
                EXPECT_LE(d, prev * (1 + 1e-12) + 1e-15) << b.name << " eps " << eps;
                prev = d;
            }
            EXPECT_LT(prev, 0.1) << b.name;
        }
    }
}

TEST(Bundled, RegularizationConvergesInL1AtN2) {
    for (const char* name : {"smooth-nondegenerate", "n2-manufactured"}) {
        ParseOptions po;
        po.resolution_override = 16;
        const auto sc = parse_config(*bundled_scenario_text(name), po).scenario;
        const auto target = evaluate(sc.psi1, sc.spec, 0.0);
        double prev = std::numeric_limits<double>::infinity();
        for (double eps : {0.1, 0.01, 1e-3}) {
            const double d = l1_distance(regularize(sc.psi1, sc.spec, eps), target);
            EXPECT_LE(d, prev) << name;
            prev = d;
        }
        EXPECT_LT(prev, 0.1) << name;
    }
}

TEST(Bundled, LelongEstimatorMatchesEveryPoleModel) {
    for (const auto& b : bundled_scenarios()) {
        const auto sc = parse_config(b.text).scenario;
        for (const auto* m : {&sc.psi1, &sc.psi2})
            for (const auto& c : pole_centers(*m)) {
                const auto e = lelong_estimate(*m, c.center, sc.spec.h());
                EXPECT_NEAR(e.numeric, e.analytic, 0.05 * e.analytic) << b.name;
            }
    }
}

TEST(Bundled, WarmStartReducesNewtonSteps) {
    for (const char* name : {"n1-oracle", "smooth-nondegenerate"}) {
        const auto sc = bundled(name).scenario;
        const int warm = newton_after_first(sc, true), cold = newton_after_first(sc, false);
        EXPECT_LT(warm, cold) << name;
    }
}
