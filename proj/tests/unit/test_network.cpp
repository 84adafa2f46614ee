#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "phasebal/error.hpp"
#include "phasebal/network.hpp"
#include "phasebal/scenarios.hpp"
#include "test_support.hpp"

using namespace phasebal;
using phasebal::testing::make_device;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::InvalidArgument;
}

std::string subject_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.subject();
    }
    return {};
}

FeederSpec baseline_chain() {
    FeederSpec spec = chain_spec(6, 0.1);
    for (std::size_t k = 1; k < 6; ++k) {
        spec.devices.push_back(make_device("L" + std::to_string(k), spec.nodes[k].name,
                                           PhaseConnection::balanced_three_phase(), DeviceKind::Load, {1.0, 0.0}));
    }
    return spec;
}

}  // namespace

TEST(Phase, OrderingAndNames) {
    EXPECT_LT(Phase::A, Phase::B);
    EXPECT_LT(Phase::B, Phase::C);
    EXPECT_EQ(kPhases.size(), 3u);
    for (const Phase p : kPhases) EXPECT_EQ(parse_phase(to_string(p)), p);
    EXPECT_EQ(parse_phase("b"), Phase::B);
    EXPECT_EQ(code_of([] { parse_phase("N"); }), ErrorCode::InvalidArgument);
}

TEST(BuildFeeder, SixNodeChainKeepsDepthOrder) {
    const Feeder f = build_feeder(baseline_chain());
    ASSERT_EQ(f.node_count(), 6u);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_EQ(f.nodes()[k].name, "N" + std::to_string(k));
        EXPECT_EQ(f.depth(k), k);
        if (k > 0) EXPECT_EQ(f.parent(k), k - 1);
    }
    EXPECT_EQ(f.devices().size(), 5u);
}

TEST(BuildFeeder, TrivialSourceOnly) {
    FeederSpec spec;
    spec.nodes = {NodeId{"N0"}};
    const Feeder f = build_feeder(spec);
    EXPECT_EQ(f.node_count(), 1u);
    EXPECT_TRUE(f.segments().empty());
    EXPECT_TRUE(f.devices().empty());
}

TEST(BuildFeeder, ExtraSegmentIsCycle) {
    FeederSpec spec = baseline_chain();
    LineSegment extra;
    extra.id = "S_loop";
    extra.from_node = NodeId{"N2"};
    extra.to_node = NodeId{"N4"};
    extra.length_km = 0.1;
    spec.segments.push_back(extra);
    EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::CyclicTopology);
    const std::string closing = subject_of([&] { build_feeder(spec); });
    EXPECT_TRUE(closing == "S3" || closing == "S4" || closing == "S_loop") << closing;
}

TEST(BuildFeeder, ReportsOffendingElements) {
    {
        FeederSpec spec = baseline_chain();
        spec.nodes.push_back(NodeId{"island"});
        EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::DisconnectedNode);
        EXPECT_EQ(subject_of([&] { build_feeder(spec); }), "island");
    }
    {
        FeederSpec spec = baseline_chain();
        spec.segments[2].to_node = NodeId{"N77"};
        EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::UnknownNode);
        EXPECT_EQ(subject_of([&] { build_feeder(spec); }), "N77");
    }
    {
        FeederSpec spec = baseline_chain();
        spec.segments[3].length_km = 0.0;
        EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::NonPositiveLength);
        EXPECT_EQ(subject_of([&] { build_feeder(spec); }), "S4");
    }
    {
        FeederSpec spec = baseline_chain();
        spec.segments[0].z_neutral_per_km = {-0.1, 0.0};
        EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::InvalidImpedance);
    }
    {
        FeederSpec spec = baseline_chain();
        spec.nodes.push_back(NodeId{"N3"});
        EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::DuplicateNode);
    }
    {
        FeederSpec spec = baseline_chain();
        spec.segments[1].to_node = spec.segments[1].from_node;
        EXPECT_EQ(code_of([&] { build_feeder(spec); }), ErrorCode::CyclicTopology);
        EXPECT_EQ(subject_of([&] { build_feeder(spec); }), "S2");
    }
}

TEST(BuildFeeder, ReversedSegmentsAreReoriented) {
    FeederSpec spec = baseline_chain();
    std::swap(spec.segments[2].from_node, spec.segments[2].to_node);
    std::reverse(spec.segments.begin(), spec.segments.end());
    const Feeder f = build_feeder(spec);
    for (std::size_t k = 1; k < f.node_count(); ++k) {
        EXPECT_EQ(f.feeding_segment(k).to_node, f.nodes()[k]);
        EXPECT_EQ(f.feeding_segment(k).from_node, f.nodes()[f.parent(k)]);
    }
}

TEST(BuildFeeder, DeterministicNormalization) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        const auto c = phasebal::testing::random_case(rng, 10);
        const FeederSpec spec = c.feeder.to_spec();
        const Feeder again = build_feeder(spec);
        EXPECT_EQ(again.nodes(), c.feeder.nodes());
        EXPECT_EQ(again.to_spec(), spec);
    }
}

TEST(BuildFeeder, ExactlyOnePathToEveryNode) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const auto c = phasebal::testing::random_case(rng, 12);
        for (std::size_t k = 0; k < c.feeder.node_count(); ++k) EXPECT_EQ(count_paths(c.feeder, k), 1u);
    }
}

TEST(AttachDevice, OneHundredTwentyPercentDg) {
    const Feeder base = build_feeder(baseline_chain());
    const Device dg = make_device("DG1", "N1", PhaseConnection::single(Phase::A), DeviceKind::DG, {-6.0, 0.0});
    const Feeder with = attach_device(base, dg);
    EXPECT_EQ(base.devices().size(), 5u);
    ASSERT_EQ(with.devices().size(), 6u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(with.devices()[i], base.devices()[i]);
    EXPECT_EQ(with.devices().back(), dg);
    EXPECT_EQ(with.nodes(), base.nodes());
    EXPECT_EQ(with.segments(), base.segments());
}

TEST(AttachDevice, ZeroLoadLeavesSolutionUnchanged) {
    const Feeder base = build_feeder(baseline_chain());
    const Feeder with = attach_device(
        base, make_device("Z", "N3", PhaseConnection::balanced_three_phase(), DeviceKind::Load, {0.0, 0.0}));
    const VoltageSolution a = solve_snapshot(base, rated_injections(base));
    const VoltageSolution b = solve_snapshot(with, rated_injections(with));
    for (std::size_t k = 0; k < base.node_count(); ++k) {
        for (std::size_t c = 0; c < kConductors; ++c) EXPECT_EQ(a.v[k][c], b.v[k][c]);
    }
}

TEST(AttachDevice, RejectsBadDevices) {
    const Feeder base = build_feeder(baseline_chain());
    EXPECT_EQ(code_of([&] {
                  attach_device(base, make_device("EV9", "N9", PhaseConnection::single(Phase::A), DeviceKind::EV,
                                                  {3.0, 0.0}));
              }),
              ErrorCode::UnknownNode);
    EXPECT_EQ(code_of([&] {
                  attach_device(base, make_device("DG", "N2", PhaseConnection::single(Phase::A), DeviceKind::DG,
                                                  {1.0, 0.0}));
              }),
              ErrorCode::SignConventionViolation);
    EXPECT_EQ(code_of([&] {
                  attach_device(base, make_device("L", "N2", PhaseConnection::single(Phase::A), DeviceKind::Load,
                                                  {-1.0, 0.0}));
              }),
              ErrorCode::SignConventionViolation);
    EXPECT_EQ(code_of([&] {
                  attach_device(base, make_device("L", "N2", PhaseConnection::single(Phase::A), DeviceKind::Load,
                                                  {std::nan(""), 0.0}));
              }),
              ErrorCode::InvalidArgument);
    Device st = make_device("ST", "N2", PhaseConnection::single(Phase::A), DeviceKind::Storage, {1.0, 0.0});
    st.battery_id = "B";
    EXPECT_EQ(code_of([&] { attach_device(base, st); }), ErrorCode::SignConventionViolation);
}

TEST(LineSegment, ImpedanceScalesWithLength) {
    LineSegment s;
    s.length_km = 0.5;
    s.z_mutual_per_km = {0.01, 0.02};
    const ImpedanceMatrix z = s.impedance();
    for (std::size_t i = 0; i < kConductors; ++i) {
        for (std::size_t j = 0; j < kConductors; ++j) {
            const Complex expect = i == j ? (i == kNeutral ? s.z_neutral_per_km : s.z_phase_per_km) * 0.5
                                          : s.z_mutual_per_km * 0.5;
            EXPECT_EQ(z[i][j], expect);
        }
    }
}
