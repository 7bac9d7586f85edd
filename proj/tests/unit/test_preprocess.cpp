#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/rng.hpp"
#include "cycloroute/preprocess/preprocess.hpp"

using namespace cycloroute;
using namespace cycloroute::preprocess;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PreprocessConfig config(std::size_t n) {
  PreprocessConfig cfg;
  cfg.grid = TimeGrid(0, 600, n);
  return cfg;
}

Row make_row(std::initializer_list<double> vals) {
  Row row;
  for (double v : vals) {
    row.values.push_back(v);
    row.mask.push_back(!std::isnan(v));
  }
  return row;
}

RoadNetwork cycle_graph(std::size_t n, VertexId offset = 0, std::size_t first_edge = 0) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({static_cast<EdgeId>(first_edge + i), static_cast<VertexId>(offset + i),
                     static_cast<VertexId>(offset + (i + 1) % n), first_edge + i});
  }
  return RoadNetwork(offset + n, edges);
}

}  // namespace

TEST(AlignToGrid, LinearInterpolationAtMidpoint) {
  auto cfg = config(3);
  RawSeries raw{0, {{0.0, 100.0}, {1200.0, 140.0}}};
  AlignCounts counts;
  Row row = align_to_grid(raw, cfg, &counts);
  EXPECT_EQ(row.values[0], 100.0);
  EXPECT_EQ(row.values[1], 120.0);
  EXPECT_EQ(row.values[2], 140.0);
  EXPECT_EQ(counts.snapped, 2u);
  EXPECT_EQ(counts.interpolated, 1u);
}

TEST(AlignToGrid, SnapsWithinTolerance) {
  auto cfg = config(2);
  RawSeries raw{0, {{610.0, 77.0}}};
  Row row = align_to_grid(raw, cfg);
  EXPECT_TRUE(row.mask[1]);
  EXPECT_EQ(row.values[1], 77.0);
  EXPECT_FALSE(row.mask[0]);  // 610 s away from slot 0
}

TEST(AlignToGrid, FarSamplesLeaveSlotMissing) {
  auto cfg = config(7);
  RawSeries raw{0, {{1800.0, 100.0}, {5400.0, 100.0}}};
  Row row = align_to_grid(raw, cfg);
  EXPECT_FALSE(row.mask[6]);  // slot 3600: nearest samples 1800 s away on both sides
  EXPECT_TRUE(row.mask[3]);
}

TEST(AlignToGrid, IdempotentOnAlignedData) {
  auto cfg = config(20);
  CounterRng rng(5, Stream::Testing);
  RawSeries raw{0, {}};
  for (std::size_t j = 0; j < 20; ++j) {
    if (rng.uniform() < 0.7) raw.samples.emplace_back(600.0 * j, rng.uniform(50, 150));
  }
  Row once = align_to_grid(raw, cfg);
  RawSeries again{0, {}};
  for (std::size_t j = 0; j < 20; ++j) {
    if (once.mask[j]) again.samples.emplace_back(600.0 * j, once.values[j]);
  }
  Row twice = align_to_grid(again, cfg);
  EXPECT_EQ(once.mask, twice.mask);
  for (std::size_t j = 0; j < 20; ++j) {
    if (once.mask[j]) EXPECT_EQ(once.values[j], twice.values[j]);
  }
}

TEST(AlignToGrid, RejectsUnsortedSeries) {
  auto cfg = config(2);
  RawSeries raw{0, {{600.0, 1.0}, {0.0, 2.0}}};
  EXPECT_THROW(align_to_grid(raw, cfg), Error);
}

TEST(RemoveOutliers, MasksValueBelowFifthOfMean) {
  auto cfg = config(4);
  // mean 77.5, threshold 15.5
  Row row = remove_outliers(make_row({100, 100, 100, 10}), cfg);
  EXPECT_EQ(row.mask, (std::vector<bool>{true, true, true, false}));
  Row same = remove_outliers(make_row({100, 100, 100, 16}), cfg);
  EXPECT_EQ(same.observed_count(), 4u);
}

TEST(RemoveOutliers, EqualAndSingleValuesKept) {
  auto cfg = config(4);
  EXPECT_EQ(remove_outliers(make_row({50, 50, 50, 50}), cfg).observed_count(), 4u);
  EXPECT_EQ(remove_outliers(make_row({kNaN, 3, kNaN, kNaN}), cfg).observed_count(), 1u);
}

TEST(InterpolateShortGaps, FillsTwoGap) {
  auto cfg = config(4);
  Row row = interpolate_short_gaps(make_row({100, kNaN, kNaN, 130}), cfg);
  EXPECT_EQ(row.observed_count(), 4u);
  EXPECT_DOUBLE_EQ(row.values[1], 110.0);
  EXPECT_DOUBLE_EQ(row.values[2], 120.0);
}

TEST(InterpolateShortGaps, LeavesLongAndBoundaryGaps) {
  auto cfg = config(5);
  Row three = interpolate_short_gaps(make_row({100, kNaN, kNaN, kNaN, 140}), cfg);
  EXPECT_EQ(three.observed_count(), 2u);
  Row lead = interpolate_short_gaps(make_row({kNaN, 100, 110, kNaN, kNaN}), cfg);
  EXPECT_FALSE(lead.mask[0]);
  EXPECT_FALSE(lead.mask[3]);
  EXPECT_FALSE(lead.mask[4]);
}

TEST(InterpolateShortGaps, NeverModifiesObservedCells) {
  auto cfg = config(60);
  CounterRng rng(9, Stream::Testing);
  for (int trial = 0; trial < 50; ++trial) {
    Row row;
    for (int j = 0; j < 60; ++j) {
      const bool obs = rng.uniform() < 0.6;
      row.values.push_back(obs ? rng.uniform(10, 100) : kNaN);
      row.mask.push_back(obs);
    }
    Row out = interpolate_short_gaps(row, cfg);
    for (int j = 0; j < 60; ++j) {
      if (row.mask[j]) {
        EXPECT_TRUE(out.mask[j]);
        EXPECT_EQ(out.values[j], row.values[j]);
      }
    }
  }
}

TEST(DropBlackout, RunLongerThanThreeHours) {
  auto cfg = config(100);
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(3, 100, 60.0);
  Mask mask = Mask::Constant(3, 100, true);
  // Row 0: 19 consecutive missing 10-min slots = 190 min > 180 min.
  for (int c = 10; c < 29; ++c) mask(0, c) = false;
  // Row 1: 18 consecutive = exactly 180 min, kept.
  for (int c = 10; c < 28; ++c) mask(1, c) = false;
  TrafficMatrix w(cfg.grid, v, mask);
  BlackoutResult out = drop_blackout_segments(w, cfg);
  EXPECT_EQ(out.removed_rows, std::vector<std::size_t>{0});
  EXPECT_EQ(out.kept_rows, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(out.removed_for_blackout, 1u);
  EXPECT_EQ(out.matrix.m(), 2u);
}

TEST(DropBlackout, MissingFractionAboveThirtyPercent) {
  auto cfg = config(100);
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(2, 100, 60.0);
  Mask mask = Mask::Constant(2, 100, true);
  for (int c = 0; c < 100; c += 3) mask(0, c) = false;  // 34 scattered cells
  for (int c = 0; c < 30; ++c) mask(1, 3 * c + 1) = false;  // exactly 30%
  TrafficMatrix w(cfg.grid, v, mask);
  BlackoutResult out = drop_blackout_segments(w, cfg);
  EXPECT_EQ(out.removed_rows, std::vector<std::size_t>{0});
  EXPECT_EQ(out.removed_for_missing_fraction, 1u);
}

TEST(DropBlackout, PermutationEquivariant) {
  auto cfg = config(50);
  CounterRng rng(11, Stream::Testing);
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(12, 50, 60.0);
  Mask mask(12, 50);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() > 0.25;
  TrafficMatrix w(cfg.grid, v, mask);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm.begin(), perm.end(), rng);
  BlackoutResult a = drop_blackout_segments(w, cfg);
  BlackoutResult b = drop_blackout_segments(w.select_rows(perm), cfg);
  std::vector<std::size_t> mapped;
  for (std::size_t r : b.removed_rows) mapped.push_back(perm[r]);
  std::sort(mapped.begin(), mapped.end());
  EXPECT_EQ(mapped, a.removed_rows);
}

TEST(Impute, TemporalOnlyFallback) {
  auto cfg = config(3);
  // Two disjoint segments: no spatial neighbours.
  RoadNetwork g(4, {{0, 0, 1, 0}, {1, 2, 3, 1}});
  Eigen::MatrixXd v(2, 3);
  v << 100, 0, 120, 50, 50, 50;
  Mask mask = Mask::Constant(2, 3, true);
  mask(0, 1) = false;
  TrafficMatrix out = impute_spatiotemporal(TrafficMatrix(cfg.grid, v, mask), g, cfg);
  EXPECT_TRUE(out.fully_observed());
  EXPECT_DOUBLE_EQ(out.value(0, 1), 110.0);
}

TEST(Impute, SpatialOnlyRatioRule) {
  auto cfg = config(40);
  cfg.temporal_window_intervals = 2;
  // Segment 0 (0->1) and segment 1 (1->2) share vertex 1.
  RoadNetwork g(3, {{0, 0, 1, 0}, {1, 1, 2, 1}});
  Eigen::MatrixXd v(2, 40);
  v.row(0).setConstant(100.0);
  v.row(1).setConstant(200.0);
  Mask mask = Mask::Constant(2, 40, true);
  // Row 0 missing in 10..29: cell 20 is > 2 intervals from any temporal anchor.
  for (int c = 10; c < 30; ++c) mask(0, c) = false;
  // Neighbour at 1.5x its mean in interval 20. Its mean moves slightly, so use
  // the observed mean as the reference.
  v(1, 20) = 300.0;
  const double mean1 = (39 * 200.0 + 300.0) / 40.0;
  TrafficMatrix out = impute_spatiotemporal(TrafficMatrix(cfg.grid, v, mask), g, cfg);
  EXPECT_DOUBLE_EQ(out.value(0, 20), 300.0 / mean1 * 100.0);
  // Near an anchor: equal-weight average of temporal (100) and spatial (200/mean1*100).
  EXPECT_DOUBLE_EQ(out.value(0, 10), 0.5 * (100.0 + 200.0 / mean1 * 100.0));
}

TEST(Impute, SpatialOnlyExactOnePointFive) {
  auto cfg = config(10);
  cfg.temporal_window_intervals = 1;
  RoadNetwork g(3, {{0, 0, 1, 0}, {1, 1, 2, 1}});
  Eigen::MatrixXd v(2, 10);
  v.row(0).setConstant(80.0);
  v.row(1) << 100, 100, 100, 100, 150, 100, 100, 50, 100, 100;  // mean 100
  Mask mask = Mask::Constant(2, 10, true);
  for (int c = 2; c < 7; ++c) mask(0, c) = false;
  TrafficMatrix out = impute_spatiotemporal(TrafficMatrix(cfg.grid, v, mask), g, cfg);
  EXPECT_DOUBLE_EQ(out.value(0, 4), 1.5 * 80.0);
}

TEST(Impute, FullyObservedUnchangedAndObservedBitExact) {
  auto cfg = config(30);
  RoadNetwork g = cycle_graph(4);
  CounterRng rng(2, Stream::Testing);
  Eigen::MatrixXd v(4, 30);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(30, 90);
  TrafficMatrix full(cfg.grid, v);
  TrafficMatrix same = impute_spatiotemporal(full, g, cfg);
  EXPECT_EQ(same.values(), full.values());

  Mask mask(4, 30);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() > 0.3;
  for (int r = 0; r < 4; ++r) mask(r, 0) = true;
  TrafficMatrix partial(cfg.grid, v, mask);
  TrafficMatrix out = impute_spatiotemporal(partial, g, cfg);
  EXPECT_TRUE(out.fully_observed());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (mask.data()[i]) EXPECT_EQ(out.values().data()[i], v.data()[i]);
  }
  TrafficMatrix parallel = impute_spatiotemporal(partial, g, cfg, 3);
  EXPECT_EQ(parallel.values(), out.values());
}

TEST(Impute, IsolatedSegmentError) {
  auto cfg = config(3);
  RoadNetwork g(4, {{0, 0, 1, 0}, {1, 2, 3, 1}});
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(2, 3, 10.0);
  Mask mask = Mask::Constant(2, 3, true);
  mask.row(0).setConstant(false);
  try {
    impute_spatiotemporal(TrafficMatrix(cfg.grid, v, mask), g, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IsolatedSegment);
  }
}

TEST(LargestScc, PicksBiggerCycle) {
  // 3-cycle on 0..2, 5-cycle on 3..7.
  std::vector<Edge> edges;
  for (int i = 0; i < 3; ++i) {
    edges.push_back({static_cast<EdgeId>(i), static_cast<VertexId>(i),
                     static_cast<VertexId>((i + 1) % 3), static_cast<std::size_t>(i)});
  }
  for (int i = 0; i < 5; ++i) {
    edges.push_back({static_cast<EdgeId>(3 + i), static_cast<VertexId>(3 + i),
                     static_cast<VertexId>(3 + (i + 1) % 5), static_cast<std::size_t>(3 + i)});
  }
  SubnetworkResult out = largest_scc(RoadNetwork(8, edges));
  EXPECT_EQ(out.network.vertex_count(), 5u);
  EXPECT_EQ(out.network.edge_count(), 5u);
  EXPECT_EQ(out.vertex_map, (std::vector<VertexId>{3, 4, 5, 6, 7}));
  EXPECT_EQ(out.row_map, (std::vector<std::size_t>{3, 4, 5, 6, 7}));
  EXPECT_NO_THROW(out.network.validate_rows(5));
}

TEST(LargestScc, IdentityOnStronglyConnected) {
  RoadNetwork g = cycle_graph(6);
  SubnetworkResult out = largest_scc(g);
  EXPECT_EQ(out.network, g);
  EXPECT_EQ(out.row_map, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(LargestScc, DirectedPathChoosesLowestVertex) {
  // Tarjan on 0->1->2 yields three singleton components; ties go to vertex 0.
  RoadNetwork g(3, {{0, 0, 1, 0}, {1, 1, 2, 1}});
  SubnetworkResult out = largest_scc(g);
  EXPECT_EQ(out.vertex_map, std::vector<VertexId>{0});
  EXPECT_EQ(out.network.edge_count(), 0u);
}

TEST(Pipeline, CleanInputIsNoOp) {
  auto cfg = config(40);
  RoadNetwork g = cycle_graph(5);
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(5, 40, 60.0);
  PipelineResult out = run_pipeline(TrafficMatrix(cfg.grid, v), g, cfg);
  EXPECT_EQ(out.report["outliers_removed"], 0);
  EXPECT_EQ(out.report["gap_cells_interpolated"], 0);
  EXPECT_EQ(out.report["rows_dropped"].size(), 0u);
  EXPECT_EQ(out.report["cells_imputed"], 0);
  EXPECT_EQ(out.report["scc"]["segments_removed"], 0);
  EXPECT_EQ(out.matrix.values(), v);
}

TEST(Pipeline, AllMissingRowDroppedAndGraphRestricted) {
  auto cfg = config(40);
  // Two 3-cycles sharing vertex 0: 0->1->2->0 (rows 0..2), 0->3->4->0 (rows 3..5).
  RoadNetwork g(5, {{0, 0, 1, 0}, {1, 1, 2, 1}, {2, 2, 0, 2}, {3, 0, 3, 3}, {4, 3, 4, 4}, {5, 4, 0, 5}});
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(6, 40, 60.0);
  Mask mask = Mask::Constant(6, 40, true);
  mask.row(4).setConstant(false);
  mask(1, 5) = false;
  PipelineResult out = run_pipeline(TrafficMatrix(cfg.grid, v, mask), g, cfg);
  EXPECT_EQ(out.report["rows_dropped"], nlohmann::json::array({4}));
  // Losing 3->4 breaks the second cycle, so its other segments leave with the SCC.
  EXPECT_EQ(out.row_map, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(out.matrix.fully_observed());
  EXPECT_EQ(out.report["gap_cells_interpolated"], 1);
  out.network.validate_rows(out.matrix.m());
}

TEST(Pipeline, RawSeriesParsing) {
  auto series = read_raw_series_csv("segment_id,timestamp,travel_time\n1,600,5\n0,0,4\n1,0,3\n");
  ASSERT_EQ(series.size(), 2u);
  EXPECT_EQ(series[0].segment_id, 1u);
  EXPECT_EQ(series[0].samples.front().first, 0.0);
  EXPECT_THROW(read_raw_series_csv("0,0,4\n0,x,5\n"), Error);
}
