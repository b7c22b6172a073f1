#include "doctest.h"
#include "properties.hpp"

#include "enrichci/designs.hpp"
#include "enrichci/errors.hpp"

#include <cmath>

using namespace enrichci;

namespace {

const TrialDesign kRosenblum{2, {0.5, 0.5}, 244, 244, 8.0, 0.05};
const TrialDesign kWorked{2, {0.5, 0.5}, 200, 100, 0.36, 0.05};

}  // namespace

TEST_SUITE("designs") {
  TEST_CASE("design validation") {
    CHECK_NOTHROW(kRosenblum.validate());
    TrialDesign d = kRosenblum;
    d.p = {0.5, 0.4};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = kRosenblum;
    d.sigma = 0.0;
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("sigma"), ConfigError);
    d = kRosenblum;
    d.alpha = 0.5;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = kRosenblum;
    d.n2 = 0;
    CHECK_THROWS_AS(d.validate(), ConfigError);
  }

  TEST_CASE("d1 enriches to the larger standardized mean") {
    const auto dec = apply_d1(kRosenblum, Stage1Summary{{2.0, 0.0}}, 1.0);
    REQUIRE(dec.selected == std::vector<int>{1});
    CHECK(dec.label(2) == "enrich_1");
    CHECK(dec.targets[0].lower == doctest::Approx(0.0));
    CHECK(dec.targets[0].upper == doctest::Approx(2.0486).epsilon(1e-3 / 2.0486));
    CHECK(dec.targets[0].se1 == doctest::Approx(16.0 / std::sqrt(122.0)));
    CHECK(dec.targets[0].se2 == doctest::Approx(16.0 / std::sqrt(244.0)));
  }

  TEST_CASE("d1 continues with the full population above the threshold") {
    // Full-population Z of 1.5 with means (a, a).
    const double a = 1.5 * 16.0 / std::sqrt(244.0);
    const auto dec = apply_d1(kRosenblum, Stage1Summary{{a, a}}, 1.0);
    CHECK(dec.label(2) == "full");
    CHECK(dec.targets[0].lower == doctest::Approx(16.0 / std::sqrt(244.0)).epsilon(1e-14));
    CHECK(std::abs(dec.targets[0].lower - 1.02434) <= 1e-4);
    CHECK(std::isinf(dec.targets[0].upper));
    CHECK(dec.targets[0].target.id(2) == "full");
  }

  TEST_CASE("d1 ties go to the first subpopulation") {
    CHECK(apply_d1(kRosenblum, Stage1Summary{{0.0, 0.0}}, 1.0).selected == std::vector<int>{1});
  }

  TEST_CASE("d2 decisions") {
    const auto full = apply_d2(kWorked, Stage1Summary{{0.113, 0.013}}, 0.025);
    CHECK(full.label(2) == "full");
    CHECK(full.targets[0].lower == 0.025);
    const auto one = apply_d2(kWorked, Stage1Summary{{0.06, -0.06}}, 0.025);
    CHECK(one.label(2) == "enrich_1");
    CHECK(one.targets[0].lower == 0.025);
    CHECK(one.targets[0].upper == doctest::Approx(0.11));
    const auto two = apply_d2(kWorked, Stage1Summary{{-0.06, 0.06}}, 0.025);
    CHECK(two.label(2) == "enrich_2");
    CHECK(two.targets[0].target.id(2) == "S2");
    const auto stop = apply_d2(kWorked, Stage1Summary{{0.01, 0.02}}, 0.025);
    CHECK(stop.stopped());
    CHECK(stop.targets.empty());
    CHECK(stop.label(2) == "stop");
  }

  TEST_CASE("d2 co-primary bounds") {
    const auto dec = apply_d2(kWorked, Stage1Summary{{0.113, 0.013}}, 0.025, true);
    REQUIRE(dec.targets.size() == 3);
    const auto& s1 = dec.bounds_for("S1", 2);
    const auto& s2 = dec.bounds_for("S2", 2);
    CHECK(s1.lower == doctest::Approx(0.037));
    CHECK(s2.lower == doctest::Approx(-0.063));
    CHECK(std::isinf(s1.upper));
    CHECK(s1.se1 == doctest::Approx(0.72 / 10.0));
    CHECK(s1.se2 == doctest::Approx(0.72 / std::sqrt(50.0)));
    CHECK(s1.target.co_primary);
  }

  TEST_CASE("kimani 2015") {
    const TrialDesign d{2, {0.5, 0.5}, 100, 100, 1.0, 0.05};
    const auto enrich = apply_kimani2015(d, Stage1Summary{{1.0, 0.5}}, 0.1);
    CHECK(enrich.label(2) == "enrich_1");
    CHECK(enrich.targets[0].lower == doctest::Approx(0.7));
    CHECK(std::isinf(enrich.targets[0].upper));
    REQUIRE(enrich.auxiliary.has_value());
    CHECK(enrich.auxiliary->value == doctest::Approx(0.25));

    const auto full = apply_kimani2015(d, Stage1Summary{{0.5, 0.5}}, 0.1);
    CHECK(full.label(2) == "full");
    CHECK(full.targets[0].unaltered);
    const Stage2Summary s2{{0.4, 0.6}, std::nullopt};
    const std::vector<Method> methods{Method::naive, Method::umau, Method::tost};
    const auto cis = confidence_intervals(d, full, Stage1Summary{{0.5, 0.5}}, s2, methods);
    REQUIRE(cis.size() == 3);
    CHECK(cis[1].lower == cis[0].lower);
    CHECK(cis[2].upper == cis[0].upper);
    CHECK(cis[1].method == Method::umau);

    CHECK(apply_kimani2015(d, Stage1Summary{{0.5, 1.0}}, 0.1).label(2) == "full");
  }

  TEST_CASE("kimani 2018") {
    const TrialDesign d{3, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 90, 90, 1.0, 0.05};
    const auto one = apply_kimani2018(d, Stage1Summary{{1.0, -2.0, -0.5}}, 0.0);
    CHECK(one.label(3) == "enrich_1");
    CHECK(one.targets[0].lower == 0.0);
    CHECK(one.targets[0].upper == doctest::Approx(2.0));
    const auto all = apply_kimani2018(d, Stage1Summary{{1.0, 0.5, 0.4}}, 0.0);
    CHECK(all.label(3) == "full");
    CHECK(all.targets[0].stage1_statistic == doctest::Approx(0.633333).epsilon(1e-5));
    CHECK(std::isinf(all.targets[0].upper));
    CHECK(apply_kimani2018(d, Stage1Summary{{-1.0, -1.0, -1.0}}, 0.0).stopped());
    const auto two = apply_kimani2018(d, Stage1Summary{{0.5, 0.3, -2.0}}, 0.0);
    CHECK(two.label(3) == "enrich_1_2");
    CHECK(two.targets[0].target.id(3) == "S1+S2");
  }

  TEST_CASE("rule configuration checks") {
    const TrialDesign three{3, {0.2, 0.3, 0.5}, 90, 90, 1.0, 0.05};
    CHECK_THROWS_AS(apply_d1(three, Stage1Summary{{0, 0, 0}}, 1.0), ConfigError);
    CHECK_THROWS_AS(apply_d2(three, Stage1Summary{{0, 0, 0}}, 1.0), ConfigError);
    CHECK_THROWS_AS(apply_kimani2015(three, Stage1Summary{{0, 0, 0}}, 1.0), ConfigError);
    CHECK_THROWS_AS((DecisionRule{RuleKind::kimani2018, 0.0, true}.validate(three)), ConfigError);
    CHECK_NOTHROW((DecisionRule{RuleKind::kimani2018, 0.0, false}.validate(three)));
    CHECK_THROWS_AS((DecisionRule{RuleKind::d2, 0.0, false}.validate(three)), ConfigError);
    CHECK(parse_rule_kind("kimani2015") == RuleKind::kimani2015);
    CHECK_THROWS_AS(parse_rule_kind("d3"), ConfigError);
  }

  TEST_CASE("pooled estimates in the worked example") {
    const Stage1Summary s1{{0.113, 0.013}};
    const Stage2Summary s2{{0.155, -0.064}, 0.045};
    const auto dec = apply_d2(kWorked, s1, 0.025, true);
    CHECK(pooled_estimate(kWorked, dec, s1, s2, "S1") == doctest::Approx(0.127).epsilon(1e-9));
    CHECK(pooled_estimate(kWorked, dec, s1, s2, "full") == doctest::Approx(0.057).epsilon(1e-9));
    CHECK(std::abs(pooled_estimate(kWorked, dec, s1, s2, "S2") - -0.013) < 5e-4);
    CHECK_THROWS_AS(pooled_estimate(kWorked, dec, s1, s2, "S3"), ContractError);
  }

  TEST_CASE("pooled estimate equals the patient-weighted mean") {
    const TrialDesign d{2, {0.3, 0.7}, 150, 90, 2.0, 0.05};
    const Stage1Summary s1{{0.4, -0.2}};
    const Stage2Summary s2{{0.1, 0.35}, std::nullopt};
    const auto full = apply_d2(d, s1, -1.0, true);
    const double full1 = 0.3 * 0.4 + 0.7 * -0.2;
    const double full2 = 0.3 * 0.1 + 0.7 * 0.35;
    CHECK(std::abs(pooled_estimate(d, full, s1, s2, "full") - (150 * full1 + 90 * full2) / 240.0) <=
          1e-12);
    CHECK(std::abs(pooled_estimate(d, full, s1, s2, "S2") -
                   (0.7 * 150 * -0.2 + 0.7 * 90 * 0.35) / (0.7 * 240)) <= 1e-12);
    const auto one = apply_d2(d, Stage1Summary{{0.4, -0.9}}, 0.2);
    REQUIRE(one.label(2) == "enrich_1");
    const Stage2Summary only1{{0.25, std::nan("")}, std::nullopt};
    CHECK(std::abs(pooled_estimate(d, one, Stage1Summary{{0.4, -0.9}}, only1, "S1") -
                   (0.3 * 150 * 0.4 + 90 * 0.25) / (0.3 * 150 + 90)) <= 1e-12);
    const Stage2Summary same{{0.4, 0.4}, std::nullopt};
    CHECK(pooled_estimate(d, one, Stage1Summary{{0.4, -0.9}}, same, "S1") ==
          doctest::Approx(0.4).epsilon(1e-14));
  }

  TEST_CASE("nine intervals of the worked example") {
    const Stage1Summary s1{{0.113, 0.013}};
    const Stage2Summary s2{{0.155, -0.064}, 0.045};
    const auto dec = apply_d2(kWorked, s1, 0.025, true);
    const std::vector<Method> methods{Method::naive, Method::umau, Method::tost};
    const auto cis = confidence_intervals(kWorked, dec, s1, s2, methods);
    REQUIRE(cis.size() == 9);
    const double want[9][2] = {{-0.024, 0.138}, {-0.079, 0.131}, {-0.078, 0.132},
                               {0.012, 0.242},  {-0.028, 0.240}, {-0.025, 0.240},
                               {-0.128, 0.102}, {-0.200, 0.093}, {-0.198, 0.094}};
    for (int i = 0; i < 9; ++i) {
      INFO(cis[i].target << " " << to_string(cis[i].method));
      CHECK(std::abs(cis[i].lower - want[i][0]) <= 1e-3);
      CHECK(std::abs(cis[i].upper - want[i][1]) <= 1e-3);
    }
    CHECK(cis[0].target == "full");
    CHECK(cis[3].target == "S1");
  }

  TEST_CASE("intervals for an enrichment decision invert the test") {
    const TrialDesign d{2, {0.5, 0.5}, 100, 60, 1.0, 0.05};
    const Stage1Summary s1{{0.5, -0.3}};
    const auto dec = apply_d2(d, s1, 0.3);
    REQUIRE(dec.label(2) == "enrich_1");
    const Stage2Summary s2{{0.2, std::nan("")}, std::nullopt};
    const std::vector<Method> methods{Method::umau};
    const auto ci = confidence_intervals(d, dec, s1, s2, methods).at(0);
    const ConditionalNormal family = dec.targets[0].family();
    const double obs = pooled_estimate(d, dec, s1, s2, "S1");
    for (int j = 0; j <= 20; ++j) {
      const double delta = ci.lower - 0.2 + (ci.width() + 0.4) * j / 20.0;
      if (std::abs(delta - ci.lower) < 1e-6 || std::abs(delta - ci.upper) < 1e-6) continue;
      const auto pair = solve_umpu(family.with_delta(delta), 0.05);
      CHECK(ci.contains(delta) == (pair.c1 <= obs && obs <= pair.c2));
    }
  }

  TEST_CASE("no intervals after a futility stop") {
    const Stage1Summary s1{{0.01, 0.02}};
    const auto dec = apply_d2(kWorked, s1, 0.025);
    const std::vector<Method> methods{Method::naive};
    CHECK_THROWS_AS(confidence_intervals(kWorked, dec, s1, Stage2Summary{}, methods),
                    ContractError);
  }

  TEST_CASE("partitions and bound forms agree on random draws") {
    const auto r = props::decision_partitions(20000, 9);
    INFO(r.detail);
    CHECK(r.pass);
  }
}
