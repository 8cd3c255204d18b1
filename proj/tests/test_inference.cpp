#include <doctest.h>

#include <sstream>

#include "ccb/inference.hpp"
#include "test_oracle.hpp"
#include "toy_fixture.hpp"

using namespace ccb;

namespace {

Intervention arm_on(const ScmTemplate& tpl, const std::string& name, Value v) {
    return Intervention::on({{tpl.var(name), v}});
}

}  // namespace

TEST_CASE("trial-0 interventional means match the independent enumerator") {
    const auto tpl = toy::make();
    const int z = 0, x = 1;
    struct Case {
        std::vector<toyoracle::Pin> pins;
        Intervention arm;
        double rounded;
    };
    const std::vector<Case> cases = {
        {{{0, x, 0}}, arm_on(tpl, "X", 0), 0.4930},
        {{{0, x, 1}}, arm_on(tpl, "X", 1), 0.5070},
        {{{0, z, 0}}, arm_on(tpl, "Z", 0), 0.7730},
        {{{0, z, 1}}, arm_on(tpl, "Z", 1), 0.2270},
        {{}, Intervention::empty(), 0.4454},
    };
    for (const auto& c : cases) {
        const double lib = exact_interventional_mean(tpl, 0, c.arm, {}, Window::lag1);
        const double ref = toyoracle::mean_y(1, 0, c.pins);
        CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
        CHECK(lib == doctest::Approx(c.rounded).epsilon(5e-5));
    }
}

TEST_CASE("trial-1 conditional mean under an implemented intervention") {
    const auto tpl = toy::make();
    const History history = {arm_on(tpl, "Z", 0)};
    const double lib =
        exact_interventional_mean(tpl, 1, arm_on(tpl, "X", 1), history, Window::lag1);
    const double ref = toyoracle::mean_y(2, 1, {{0, 0, 0}, {1, 1, 1}});
    CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
    CHECK(lib == doctest::Approx(0.503822).epsilon(5e-7));
}

TEST_CASE("lag-1 window keeps only the previous trial's intervention") {
    const auto tpl = toy::make();
    const History history = {arm_on(tpl, "Z", 0), arm_on(tpl, "X", 1)};
    const Intervention arm = arm_on(tpl, "Z", 1);
    const double lag1 = exact_interventional_mean(tpl, 2, arm, history, Window::lag1);
    const double full = exact_interventional_mean(tpl, 2, arm, history, Window::full);
    // lag1 drops do(Z_0=0); full keeps it
    const double ref_lag1 = toyoracle::mean_y(3, 2, {{1, 1, 1}, {2, 0, 1}});
    const double ref_full = toyoracle::mean_y(3, 2, {{0, 0, 0}, {1, 1, 1}, {2, 0, 1}});
    CHECK(lag1 == doctest::Approx(ref_lag1).epsilon(1e-12));
    CHECK(full == doctest::Approx(ref_full).epsilon(1e-12));
    CHECK(lag1 != doctest::Approx(full).epsilon(1e-9));
}

TEST_CASE("reward table argmax breaks ties toward the lowest arm id") {
    RewardTable t;
    t.means = {0.4, 0.7, 0.7};
    t.argmax = -1;
    for (std::size_t i = 0; i < t.means.size(); ++i)
        if (t.argmax < 0 || t.means[i] > t.means[static_cast<std::size_t>(t.argmax)])
            t.argmax = static_cast<int>(i);
    CHECK(t.argmax == 1);
    CHECK(t.best() == doctest::Approx(0.7));
    CHECK(t.gap(0) == doctest::Approx(0.3));
}

TEST_CASE("exact reward table over the toy arms") {
    const auto tpl = toy::make();
    const auto arms = toy::pomis_arms(tpl);
    const auto table = exact_reward_table(tpl, arms, 0, {}, Window::lag1);
    REQUIRE(table.means.size() == 4);
    CHECK(table.means[0] == doctest::Approx(0.4930).epsilon(5e-5));
    CHECK(table.means[1] == doctest::Approx(0.5070).epsilon(5e-5));
    CHECK(table.means[2] == doctest::Approx(0.7730).epsilon(5e-5));
    CHECK(table.means[3] == doctest::Approx(0.2270).epsilon(5e-5));
    CHECK(table.argmax == 2);
}

TEST_CASE("monte carlo estimate agrees with the exact mean") {
    const auto tpl = toy::make();
    Rng rng = make_rng(7, {99});
    const Intervention arm = arm_on(tpl, "Z", 0);
    const auto mc = monte_carlo_mean(tpl, 0, arm, {}, Window::lag1, 50000, rng);
    const double exact = exact_interventional_mean(tpl, 0, arm, {}, Window::lag1);
    CHECK(mc.n == 50000);
    CHECK(mc.se == doctest::Approx(std::sqrt(mc.mean * (1 - mc.mean) / mc.n)).epsilon(1e-12));
    CHECK(std::abs(mc.mean - exact) <= 4 * mc.se);
}

TEST_CASE("observational dataset generation and CSV round-trip") {
    const auto tpl = toy::make();
    Rng rng = make_rng(3, {5});
    const auto data = generate_observational(unroll(tpl, 2), 500, rng);
    CHECK(data.samples == 500);
    CHECK(data.slices == 2);
    CHECK(data.n_vars == 3);

    std::stringstream ss;
    write_dataset_csv(data, tpl, ss);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "sample,slice,variable,value");
    ss.seekg(0);
    const auto back = read_dataset_csv(tpl, ss);
    CHECK(back.values == data.values);

    Rng rng2 = make_rng(3, {5});
    auto intervened = mutilate(unroll(tpl, 2), 0, arm_on(tpl, "Z", 1));
    CHECK_THROWS_AS(generate_observational(intervened, 10, rng2), std::invalid_argument);
    CHECK_THROWS_AS(generate_observational(unroll(tpl, 2), 0, rng2), std::invalid_argument);
}

TEST_CASE("fitted conditionals recover identifiable quantities") {
    const auto tpl = toy::make();
    Rng rng = make_rng(11, {1});
    const auto data = generate_observational(unroll(tpl, 3), 100000, rng);
    const auto fhat = fit_structural_pmfs(data, tpl, 1.0);

    // Z_0 is a root: its marginal is identifiable. P(Z_0=1) = 0.6.
    bool found = false;
    for (const auto& [name, pmf] : fhat.root_marginals)
        if (name == "Z") {
            found = true;
            CHECK(pmf[1] == doctest::Approx(0.6).epsilon(0.02));
        }
    CHECK(found);

    // do(Z_0=0) is unconfounded: the truncated factorisation recovers it.
    Rng sim_rng = make_rng(11, {2});
    const double est = simulate_from_fitted(fhat, tpl, 0, arm_on(tpl, "Z", 0), {}, Window::lag1,
                                            100000, sim_rng);
    CHECK(est == doctest::Approx(0.7730).epsilon(0.03));
}

TEST_CASE("confounding report names the bidirected pair") {
    const auto tpl = toy::make();
    const auto rep = confounding_report(tpl);
    REQUIRE_FALSE(rep.empty());
    bool has_xy = false;
    for (const auto& [a, b] : rep.confounded_pairs)
        if ((a == "X" && b == "Y") || (a == "Y" && b == "X")) has_xy = true;
    CHECK(has_xy);
    CHECK_FALSE(rep.to_string().empty());
}

TEST_CASE("estimated model export is readable") {
    const auto tpl = toy::make();
    Rng rng = make_rng(1, {1});
    const auto data = generate_observational(unroll(tpl, 2), 2000, rng);
    const auto fhat = fit_structural_pmfs(data, tpl, 1.0);
    std::stringstream ss;
    write_estimated_sem(fhat, tpl, ss);
    CHECK(ss.str().find("Z") != std::string::npos);
    CHECK(ss.str().find("Y") != std::string::npos);
}
