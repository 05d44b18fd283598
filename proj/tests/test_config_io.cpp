#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ehrlab/config.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/io.hpp"

using namespace ehrlab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"([grid]
dims = 1
points = 64
extent = 20

[field]
kind = uniform_e
E0 = 0.02, 0, 0

[matter]
model = dirac
m = 1
e = 1

[evolution]
dt = 0.01
steps = 100
)";

std::string with_line(const std::string& base, const std::string& from, const std::string& to) {
    std::string s = base;
    const auto p = s.find(from);
    EXPECT_NE(p, std::string::npos) << from;
    return s.replace(p, from.size(), to);
}

template <typename E>
std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const E& e) {
        return e.what();
    }
    return "";
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ehrlab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(Config, MinimalParsesWithDefaults) {
    const auto c = parse_config(kMinimal);
    EXPECT_EQ(c.grid.dims, 1);
    EXPECT_EQ(c.grid.points[0], 64);
    EXPECT_EQ(c.field.kind, FieldKind::UniformE);
    EXPECT_EQ(c.field.E0[0], 0.02);
    EXPECT_EQ(c.model, Model::Dirac);
    EXPECT_EQ(c.steps, 100);
    EXPECT_EQ(c.dump_every, 1);
    EXPECT_EQ(c.stencil_order, 4);
    EXPECT_EQ(c.propagator, DiracPropagator::Split);
    EXPECT_EQ(c.sweep, SweepKind::None);
    EXPECT_EQ(c.tolerances.momentum_integral, 1e-3);
}

TEST(Config, RangeErrorNamesKeyAndLine) {
    const auto msg = error_of<InvalidArgument>(with_line(kMinimal, "dt = 0.01", "dt = -0.1"));
    EXPECT_NE(msg.find("[evolution] dt"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 16"), std::string::npos) << msg;
}

TEST(Config, IncommensurateWaveRejected) {
    const std::string text = with_line(kMinimal, "kind = uniform_e\nE0 = 0.02, 0, 0",
                                       "kind = plane_wave\namplitude = 0.1\nk = 6.2831853, 0, 0\npol = 0, 1, 0");
    const auto msg = error_of<InvalidArgument>(with_line(text, "extent = 20", "extent = 1"));
    EXPECT_NE(msg.find("lattice"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[field]"), std::string::npos) << msg;
}

TEST(Config, SyntaxErrors) {
    EXPECT_NE(error_of<IoError>(std::string(kMinimal) + "colour = red\n").find("unknown key 'colour'"), std::string::npos);
    EXPECT_NE(error_of<IoError>(std::string(kMinimal) + "[extras]\n").find("unknown section"), std::string::npos);
    EXPECT_NE(error_of<IoError>(with_line(kMinimal, "steps = 100", "steps = many")).find("integer"), std::string::npos);
    EXPECT_NE(error_of<IoError>(with_line(kMinimal, "m = 1", "m")).find("line 12"), std::string::npos);
    const std::string text(kMinimal);
    EXPECT_NE(error_of<InvalidArgument>(text.substr(0, text.find("[evolution]"))).find("[evolution]"),
              std::string::npos);
}

TEST(Config, SweepGrammar) {
    auto c = parse_config(std::string(kMinimal) + "[check]\nsweep = width-halving(3)\nexpansion_point = peak\n");
    EXPECT_EQ(c.sweep, SweepKind::WidthHalving);
    EXPECT_EQ(c.sweep_levels, 3);
    EXPECT_EQ(c.expansion_point, ExpansionPoint::Peak);
    c = parse_config(std::string(kMinimal) + "[check]\nsweep = dt-halving(2)\n");
    EXPECT_EQ(c.sweep, SweepKind::DtHalving);
    EXPECT_THROW(parse_config(std::string(kMinimal) + "[check]\nsweep = dt-halving(1)\n"), InvalidArgument);
    EXPECT_THROW(parse_config(std::string(kMinimal) + "[check]\nsweep = sideways\n"), InvalidArgument);
}

TEST(Config, RoundTrip) {
    auto c = parse_config(std::string(kMinimal) +
                          "[check]\nsweep = width-halving(3)\ntol_point = 0.25\nstencil_order = 2\n");
    c.packet.width = {0.1, 1.0 / 3.0, 1.0};
    c.packet.skew = -2.5;
    c.mass = 1.0 / 7.0;
    const std::string text = to_config_text(c);
    const auto back = parse_config(text);
    EXPECT_EQ(to_config_text(back), text);
    EXPECT_EQ(back.packet.width, c.packet.width);
    EXPECT_EQ(back.mass, c.mass);
    EXPECT_EQ(back.tolerances.momentum_point, 0.25);
    EXPECT_EQ(back.stencil_order, 2);
    EXPECT_EQ(back.sweep_levels, 3);
    EXPECT_EQ(back.grid, c.grid);
}

TEST(Config, ShippedExamplesParse) {
    for (const auto& e : fs::directory_iterator(fs::path(EHRLAB_SOURCE_DIR) / "configs"))
        if (e.path().extension() == ".ini") EXPECT_NO_THROW(load_config(e.path())) << e.path();
}

TEST(Config, DefaultsDocumentOptionalKeys) {
    const auto d = defaults_text();
    for (const char* key : {"dump_every", "stencil_order", "tol_energy", "expansion_point", "mask_floor", "propagator"})
        EXPECT_NE(d.find(key), std::string::npos) << key;
}

TEST(Io, ExactDecimalRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(exact_decimal(v)), v);
}

TEST(Io, TimeseriesRoundTripBitExact) {
    std::vector<TrajectoryRecord> recs(3);
    for (int i = 0; i < 3; ++i) {
        recs[i].t = 0.1 * i;
        recs[i].xi = {1.0 / 3.0 + i, 0, 0};
        recs[i].v = {0.123456789012345678, 0, 0};
        recs[i].P = {std::nextafter(0.5, 1.0), 0, 0};
        recs[i].En = std::sqrt(1.25);
        recs[i].Q = 1.0 - 1e-16;
        recs[i].d = {-1e-17, 0, 0};
        recs[i].neg_freq_fraction = 3e-30;
    }
    const auto dir = temp_dir("csv");
    write_timeseries(dir / "traj.csv", recs);
    const auto back = read_timeseries(dir / "traj.csv");
    ASSERT_EQ(back.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].t, recs[i].t);
        EXPECT_EQ(back[i].xi, recs[i].xi);
        EXPECT_EQ(back[i].v, recs[i].v);
        EXPECT_EQ(back[i].P, recs[i].P);
        EXPECT_EQ(back[i].En, recs[i].En);
        EXPECT_EQ(back[i].Q, recs[i].Q);
        EXPECT_EQ(back[i].d, recs[i].d);
        EXPECT_EQ(back[i].neg_freq_fraction, recs[i].neg_freq_fraction);
        EXPECT_EQ(back[i].xi[1], 0.0);
    }
    EXPECT_FALSE(fs::exists(dir / "traj.csv.tmp"));
}

TEST(Io, SingleRecordCsvHasHeaderAndOneRow) {
    const std::string csv = trajectory_csv({TrajectoryRecord{}});
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_EQ(csv.rfind("t,xi_x,xi_y,xi_z,vx,vy,vz,Px,Py,Pz,E,Q,dx,dy,dz,negfrac\n", 0), 0u);
}

TEST(Io, TimeseriesRejectsMalformedFile) {
    const auto dir = temp_dir("badcsv");
    std::ofstream(dir / "a.csv") << "t,xi_x\n1,2\n";
    EXPECT_THROW(read_timeseries(dir / "a.csv"), IoError);
    EXPECT_THROW(read_timeseries(dir / "missing.csv"), IoError);
}

TEST(Io, SnapshotRoundTripBitExact) {
    const auto g = make_grid({2, {8, 16, 1}, {3, 5, 1}});
    auto s = init_gaussian(Model::Dirac, g, 1.5, -1, {{0.1, 0.2, 0}, {0.3, 0.4, 1}, {1, 0, 0}, 1.0});
    s.t = 1.0 / 3.0;
    const auto dir = temp_dir("snap");
    write_snapshot(dir / "a.snap", s, {{"neg_freq_fraction", "1e-20"}});
    const auto back = read_snapshot(dir / "a.snap");
    EXPECT_EQ(back.state.model, Model::Dirac);
    EXPECT_EQ(back.state.t, s.t);
    EXPECT_EQ(back.state.mass, 1.5);
    EXPECT_EQ(back.state.charge, -1.0);
    EXPECT_EQ(*back.state.grid(), *g);
    ASSERT_EQ(back.state.components.size(), 4u);
    for (int c = 0; c < 4; ++c)
        EXPECT_EQ(std::memcmp(back.state.components[c].values().data(), s.components[c].values().data(),
                              g->size() * sizeof(cplx)),
                  0);
    EXPECT_EQ(back.extra.at("neg_freq_fraction"), "1e-20");
}

TEST(Io, SnapshotTruncationReported) {
    const auto g = make_grid({1, {16, 1, 1}, {4, 1, 1}});
    const auto s = init_gaussian(Model::KG, g, 1, 1, {{}, {0.3, 1, 1}, {}, 0});
    const std::string bytes = encode_snapshot(s);
    try {
        decode_snapshot(bytes.substr(0, bytes.size() - 10));
        FAIL() << "no error";
    } catch (const IoError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("expected " + std::to_string(2 * 16 * 16) + " bytes"), std::string::npos) << msg;
        EXPECT_NE(msg.find("got " + std::to_string(2 * 16 * 16 - 10)), std::string::npos) << msg;
    }
}

TEST(Io, SnapshotRejectsBadMagicAndComponentCount) {
    const auto g = make_grid({1, {16, 1, 1}, {4, 1, 1}});
    const auto s = init_gaussian(Model::Dirac, g, 1, 1, {{}, {0.3, 1, 1}, {}, 0});
    std::string bytes = encode_snapshot(s);
    EXPECT_EQ(s.components.size(), 2u);
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_snapshot(bad), IoError);
    const auto p = bytes.find("components = 2");
    ASSERT_NE(p, std::string::npos);
    bytes.replace(p, 14, "components = 4");
    EXPECT_THROW(decode_snapshot(bytes), IoError);
}
