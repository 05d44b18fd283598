#include "ehrlab/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ehrlab/errors.hpp"

namespace ehrlab {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError(what + ": cannot parse '" + s + "'");
    return v;
}

constexpr const char* kTrajectoryHeader = "t,xi_x,xi_y,xi_z,vx,vy,vz,Px,Py,Pz,E,Q,dx,dy,dz,negfrac";

}  // namespace

std::string exact_decimal(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
    std::string out = kTrajectoryHeader;
    out += '\n';
    for (const auto& r : records) {
        const double vals[] = {r.t,    r.xi[0], r.xi[1], r.xi[2], r.v[0], r.v[1], r.v[2], r.P[0],
                               r.P[1], r.P[2],  r.En,    r.Q,     r.d[0], r.d[1], r.d[2], r.neg_freq_fraction};
        for (std::size_t i = 0; i < std::size(vals); ++i) {
            if (i) out += ',';
            out += g17(vals[i]);
        }
        out += '\n';
    }
    return out;
}

void write_timeseries(const fs::path& path, const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) throw InvalidArgument("write_timeseries: no records for " + path.string());
    write_file_atomic(path, trajectory_csv(records));
}

std::vector<TrajectoryRecord> read_timeseries(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != kTrajectoryHeader)
        throw IoError(path.string() + ": unexpected trajectory header");
    std::vector<TrajectoryRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            v.push_back(parse_double(cell, path.string() + " line " + std::to_string(lineno)));
        if (v.size() != 16) throw IoError(path.string() + " line " + std::to_string(lineno) + ": expected 16 columns");
        TrajectoryRecord r;
        r.t = v[0];
        r.xi = {v[1], v[2], v[3]};
        r.v = {v[4], v[5], v[6]};
        r.P = {v[7], v[8], v[9]};
        r.En = v[10];
        r.Q = v[11];
        r.d = {v[12], v[13], v[14]};
        r.neg_freq_fraction = v[15];
        out.push_back(r);
    }
    return out;
}

std::string residuals_csv(const std::vector<BalanceSample>& samples) {
    std::string out = "t,res_E_int,res_P_int,res_P_point,res_P_corr\n";
    for (const auto& s : samples) {
        out += g17(s.t) + ',' + g17(s.dEn_dt_numeric - s.power_integral) + ',' +
               g17(norm(s.dP_dt_numeric - s.force_integral)) + ',' + g17(norm(s.dP_dt_numeric - s.force_point)) +
               ',' + g17(norm(s.dP_dt_numeric - s.force_corrected)) + '\n';
    }
    return out;
}

namespace {

constexpr const char* kMagic = "EHRLAB1";

void put_le(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_le(const char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    return std::bit_cast<double>(bits);
}

const std::vector<std::string>& fixed_keys() {
    static const std::vector<std::string> k = {"model", "dims", "points", "extent", "t", "m", "e", "components"};
    return k;
}

}  // namespace

std::string encode_snapshot(const MatterState& s, const std::map<std::string, std::string>& extra) {
    s.validate();
    const Grid& g = *s.grid();
    std::ostringstream h;
    h << kMagic << "\n";
    h << "model = " << to_string(s.model) << "\n";
    h << "dims = " << g.dims() << "\n";
    h << "points = " << g.points(0) << ", " << g.points(1) << ", " << g.points(2) << "\n";
    h << "extent = " << exact_decimal(g.extent(0)) << ", " << exact_decimal(g.extent(1)) << ", "
      << exact_decimal(g.extent(2)) << "\n";
    h << "t = " << exact_decimal(s.t) << "\n";
    h << "m = " << exact_decimal(s.mass) << "\n";
    h << "e = " << exact_decimal(s.charge) << "\n";
    h << "components = " << s.components.size() << "\n";
    for (const auto& [k, v] : extra) {
        for (const auto& f : fixed_keys())
            if (k == f) throw InvalidArgument("snapshot: extra key '" + k + "' collides with a fixed key");
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw InvalidArgument("snapshot: extra header entries must be single-line and free of '='");
        h << k << " = " << v << "\n";
    }
    h << "\n";
    std::string out = h.str();
    out.reserve(out.size() + 16 * g.size() * s.components.size());
    for (const auto& c : s.components)
        for (const auto& v : c.values()) {
            put_le(out, v.real());
            put_le(out, v.imag());
        }
    return out;
}

Snapshot decode_snapshot(const std::string& bytes) {
    const std::string magic_line = std::string(kMagic) + "\n";
    if (bytes.compare(0, magic_line.size(), magic_line) != 0)
        throw IoError("snapshot: magic mismatch (expected " + std::string(kMagic) + ")");
    const auto end = bytes.find("\n\n", magic_line.size() - 1);
    if (end == std::string::npos) throw IoError("snapshot: header is not terminated by a blank line");
    std::map<std::string, std::string> kv;
    std::istringstream h(bytes.substr(magic_line.size(), end + 1 - magic_line.size()));
    std::string line;
    while (std::getline(h, line)) {
        if (line.empty()) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw IoError("snapshot: malformed header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    for (const auto& k : fixed_keys())
        if (!kv.count(k)) throw IoError("snapshot: header lacks key '" + k + "'");

    auto list = [&](const std::string& key) {
        std::vector<double> v;
        std::stringstream ss(kv[key]);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(' ');
            v.push_back(parse_double(b == std::string::npos ? item : item.substr(b), "snapshot " + key));
        }
        if (v.size() != 3) throw IoError("snapshot: '" + key + "' needs 3 values");
        return v;
    };

    GridSpec spec;
    spec.dims = static_cast<int>(parse_double(kv["dims"], "snapshot dims"));
    const auto pts = list("points");
    const auto ext = list("extent");
    for (int a = 0; a < 3; ++a) {
        spec.points[a] = static_cast<int>(pts[a]);
        spec.extent[a] = ext[a];
    }
    Snapshot snap;
    MatterState& s = snap.state;
    try {
        s.model = model_from_string(kv["model"]);
    } catch (const Error& e) {
        throw IoError(std::string("snapshot: ") + e.what());
    }
    s.t = parse_double(kv["t"], "snapshot t");
    s.mass = parse_double(kv["m"], "snapshot m");
    s.charge = parse_double(kv["e"], "snapshot e");
    const auto ncomp = static_cast<std::size_t>(parse_double(kv["components"], "snapshot components"));
    const GridPtr grid = make_grid(spec);
    if (static_cast<int>(ncomp) != MatterState::component_count(s.model, spec.dims))
        throw IoError("snapshot: component count " + std::to_string(ncomp) + " does not match model " +
                      to_string(s.model) + " in " + std::to_string(spec.dims) + "D");

    const std::size_t expected = 16 * grid->size() * ncomp;
    const std::size_t actual = bytes.size() - (end + 2);
    if (actual < expected)
        throw IoError("snapshot: truncated payload (expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(actual) + ")");
    if (actual > expected)
        throw IoError("snapshot: payload size disagrees with header (expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual) + ")");
    const char* p = bytes.data() + end + 2;
    for (std::size_t c = 0; c < ncomp; ++c) {
        std::vector<cplx> v(grid->size());
        for (auto& z : v) {
            z = {get_le(p), get_le(p + 8)};
            p += 16;
        }
        s.components.emplace_back(grid, std::move(v));
    }
    for (auto& [k, v] : kv) {
        bool fixed = false;
        for (const auto& f : fixed_keys()) fixed = fixed || f == k;
        if (!fixed) snap.extra[k] = v;
    }
    return snap;
}

void write_snapshot(const fs::path& path, const MatterState& state, const std::map<std::string, std::string>& extra) {
    write_file_atomic(path, encode_snapshot(state, extra));
}

Snapshot read_snapshot(const fs::path& path) {
    try {
        return decode_snapshot(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace ehrlab
