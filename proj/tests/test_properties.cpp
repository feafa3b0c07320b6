#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "comc/error.hpp"
#include "comc/fundamental_diagram.hpp"
#include "comc/metrics.hpp"
#include "comc/optimizer.hpp"
#include "comc/sweep.hpp"
#include "comc/units.hpp"

namespace comc {
namespace {

using units::kmh_to_ms;
using units::vph_to_vps;

FdParams random_fd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cc0(0.5, 3.0), cc1(0.5, 1.5), len(3.5, 6.0), vf(90, 140);
  FdParams p;
  p.cc0 = cc0(rng);
  p.cc1 = cc1(rng);
  p.veh_length = len(rng);
  p.v_free = kmh_to_ms(vf(rng));
  p.v_crit = 0.6 * p.v_free;
  return p;
}

TEST(FdProperty, FlowStrictlyIncreasingInSpeed) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const FdParams p = random_fd(rng);
    double prev = 0.0;
    for (double v = 0.05; v <= p.v_free; v += 0.05) {
      const double q = fd_state_at_speed(v, p).q;
      ASSERT_GT(q, prev);
      prev = q;
    }
    EXPECT_NEAR(lane_capacity(p), fd_state_at_speed(p.v_free, p).q, 1e-12);
  }
}

TEST(FdProperty, StateIdentities) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const FdParams p = random_fd(rng);
    std::uniform_real_distribution<double> v(0.1, p.v_free);
    const double s = v(rng);
    const auto st = fd_state_at_speed(s, p);
    EXPECT_NEAR(st.q, st.k * st.v, 1e-12);
    EXPECT_NEAR(st.h * st.q, 1.0, 1e-12);
  }
}

TEST(FdProperty, AcceptedDemandRespectsEquilibriumHeadway) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> frac(0.01, 1.3);
  for (int trial = 0; trial < 500; ++trial) {
    const FdParams p = random_fd(rng);
    const double q = frac(rng) * lane_capacity(p);
    try {
      const auto s = state_from_demand(q, p.v_free, p);
      EXPECT_GE(s.h, equilibrium_headway(p.v_free, p) - 1e-12);
    } catch (const InfeasibleDemandError&) {
      EXPECT_GT(q, lane_capacity(p));
    }
  }
}

SolverSettings coarse() {
  SolverSettings s;
  s.v_step_coarse = s.v_step_fine = kmh_to_ms(1.0);
  s.d_step_coarse = s.d_step_fine = 20.0;
  return s;
}

TEST(OptimizerProperty, SolvedPlansAreFeasible) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> qm(1800, 2300), qr(150, 650), rho(0.1, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    CoordinationInputs in;
    in.q_m = vph_to_vps(qm(rng));
    in.lambda = vph_to_vps(qr(rng));
    in.rho = rho(rng);
    const auto plan = solve(in, coarse());
    if (!plan) continue;
    ++solved;
    const auto r = check_feasibility(plan->n, plan->d, plan->v_c, in);
    EXPECT_TRUE(r.feasible());
    EXPECT_GE(r.gap, 0.0);
    EXPECT_GE(r.stability, 0.0);
    EXPECT_GE(r.accel, 0.0);
    EXPECT_GT(plan->omega, 0.0);
    EXPECT_LT(plan->omega, in.fd.v_free);
    EXPECT_GE(plan->v_c, in.fd.v_crit);
    EXPECT_LE(plan->v_c, in.fd.v_free);
  }
  EXPECT_GT(solved, 10);
}

TEST(OptimizerProperty, WeightRescalingKeepsArgmin) {
  for (double q_r : {300.0, 400.0, 500.0}) {
    CoordinationInputs in;
    in.lambda = vph_to_vps(q_r);
    in.w_m = 0.3;
    in.w_r = 0.7;
    const auto a = solve(in, coarse());
    for (double c : {0.01, 2.5, 100.0}) {
      CoordinationInputs s = in;
      s.w_m *= c;
      s.w_r *= c;
      const auto b = solve(s, coarse());
      ASSERT_TRUE(a && b);
      EXPECT_EQ(a->n, b->n);
      EXPECT_EQ(a->d, b->d);
      EXPECT_EQ(a->v_c, b->v_c);
      EXPECT_NEAR(b->objective, c * a->objective, 1e-9 * b->objective);
    }
  }
}

TEST(OptimizerProperty, ObjectiveNonDecreasingInDistance) {
  const double table[][2] = {{2000, 300}, {2000, 400}, {2000, 500},
                             {2200, 300}, {2200, 400}, {2200, 500}};
  for (const auto& row : table) {
    CoordinationInputs in;
    in.q_m = vph_to_vps(row[0]);
    in.lambda = vph_to_vps(row[1]);
    const CoordinationModel model(in);
    const auto plan = solve(in, coarse());
    ASSERT_TRUE(plan);
    for (double dv : {-1.0, 0.0, 1.0}) {
      const double v = plan->v_c + kmh_to_ms(dv);
      double prev = -1e300;
      for (double d = 1.0; d <= 2000.0; d += 1.0) {
        if (!model.check(plan->n, d, v).feasible()) continue;
        const double obj = model.evaluate(plan->n, d, v).objective;
        EXPECT_GE(obj, prev - 1e-9) << "q_m=" << row[0] << " q_r=" << row[1] << " d=" << d;
        prev = obj;
      }
    }
  }
}

TEST(OptimizerProperty, PlatoonSizeNonDecreasingInMainlineWeight) {
  const double table[][2] = {{2000, 300}, {2000, 400}, {2000, 500},
                             {2200, 300}, {2200, 400}, {2200, 500}};
  for (const auto& row : table) {
    CoordinationInputs in;
    in.q_m = vph_to_vps(row[0]);
    in.lambda = vph_to_vps(row[1]);
    const auto rows = parameter_sweep(in, SweepAxis::kWeights, unit_grid(), coarse());
    int prev = 0;
    for (const auto& r : rows) {
      if (!r.plan) continue;
      EXPECT_GE(r.plan->n, prev) << "q_m=" << row[0] << " q_r=" << row[1] << " w_m=" << r.axis_value;
      prev = r.plan->n;
    }
  }
}

TEST(OptimizerProperty, FrontierMonotone) {
  CoordinationInputs in;
  std::vector<double> q_grid;
  for (double q = 1800; q <= 2300; q += 50) q_grid.push_back(vph_to_vps(q));
  const std::vector<double> rhos{0.2, 0.4, 0.6, 0.8};
  const auto pts = ramp_flow_frontier(in, q_grid, rhos);
  ASSERT_EQ(pts.size(), q_grid.size() * rhos.size());
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    for (std::size_t j = 1; j < rhos.size(); ++j) {
      EXPECT_GE(pts[i * rhos.size() + j].max_lambda, pts[i * rhos.size() + j - 1].max_lambda);
    }
    if (i > 0) {
      for (std::size_t j = 0; j < rhos.size(); ++j) {
        EXPECT_LE(pts[i * rhos.size() + j].max_lambda, pts[(i - 1) * rhos.size() + j].max_lambda);
      }
    }
  }
}

TEST(MetricsProperty, MergeIsAssociativeAndOrderFree) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> delay(0.0, 120.0);
  std::vector<sim::TripRecord> all;
  for (int i = 0; i < 300; ++i) {
    sim::TripRecord r;
    r.vehicle_id = i;
    r.cls = i % 5 == 0 ? sim::VehicleClass::kRamp : sim::VehicleClass::kMainline;
    r.entry_time = i;
    r.ideal_time = 60.0;
    r.exit_time = r.entry_time + r.ideal_time + delay(rng);
    all.push_back(r);
  }
  const DelayReport whole = aggregate_report(all);
  std::uniform_int_distribution<std::size_t> cut(1, all.size() - 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t a = cut(rng), b = cut(rng);
    if (a > b) std::swap(a, b);
    const DelayReport x = aggregate_report(std::vector<sim::TripRecord>(all.begin(), all.begin() + a));
    const DelayReport y = aggregate_report(std::vector<sim::TripRecord>(all.begin() + a, all.begin() + b));
    const DelayReport z = aggregate_report(std::vector<sim::TripRecord>(all.begin() + b, all.end()));
    DelayReport left = x;
    left.merge(y).merge(z);
    DelayReport yz = y;
    yz.merge(z);
    DelayReport right = x;
    right.merge(yz);
    DelayReport rev = z;
    rev.merge(y).merge(x);
    for (const DelayReport* r : {&left, &right, &rev}) {
      EXPECT_EQ(r->mainline.count, whole.mainline.count);
      EXPECT_EQ(r->ramp.count, whole.ramp.count);
      EXPECT_NEAR(*r->overall().mean_delay(), *whole.overall().mean_delay(), 1e-9);
    }
  }
}

TEST(MetricsProperty, ContourCountsMatchSamplesInWindow) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> t(-100, 7300), x(0, 3000), v(0, 33);
  ContourWindow w;
  SpeedContour c(w);
  long long inside = 0;
  double sum = 0.0, cell_sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double tt = t(rng), xx = x(rng), vv = v(rng);
    if (c.add(tt, xx, vv)) {
      ++inside;
      sum += vv;
    }
  }
  for (const auto& cell : c.cells()) cell_sum += cell.speed_sum;
  EXPECT_EQ(c.total_count(), inside);
  EXPECT_NEAR(cell_sum, sum, 1e-6);
}

}  // namespace
}  // namespace comc
