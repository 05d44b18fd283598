#include "ehrlab/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ehrlab/errors.hpp"

namespace ehrlab {

std::string to_string(SweepKind s) {
    switch (s) {
        case SweepKind::None: return "none";
        case SweepKind::WidthHalving: return "width-halving";
        case SweepKind::DtHalving: return "dt-halving";
    }
    return "?";
}

std::string to_string(ExpansionPoint e) { return e == ExpansionPoint::Centroid ? "centroid" : "peak"; }

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"grid", {"dims", "points", "extent"}},
        {"field", {"kind", "E0", "B0", "G", "amplitude", "k", "pol"}},
        {"matter", {"model", "m", "e", "center", "width", "momentum", "skew"}},
        {"evolution", {"dt", "steps", "dump_every", "propagator"}},
        {"check",
         {"stencil_order", "tol_energy", "tol_momentum", "tol_point", "tol_corrected", "sweep", "expansion_point",
          "mask_floor", "tensor", "classical_init"}},
        {"output", {"directory", "formats"}},
    };
    return s;
}

std::string where(const std::string& section, const std::string& key, int line) {
    return "config line " + std::to_string(line) + ": [" + section + "] " + key;
}

class Reader {
public:
    explicit Reader(std::map<std::string, Section> sections) : sections_(std::move(sections)) {}

    bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
    bool has(const std::string& s, const std::string& k) const {
        auto it = sections_.find(s);
        return it != sections_.end() && it->second.count(k) != 0;
    }

    const Entry& require(const std::string& s, const std::string& k) const {
        if (!has(s, k)) throw InvalidArgument("config: missing required key [" + s + "] " + k);
        return sections_.at(s).at(k);
    }

    std::string text(const std::string& s, const std::string& k, const std::string& def) const {
        return has(s, k) ? sections_.at(s).at(k).value : def;
    }

    double number(const std::string& s, const std::string& k) const { return parse_number(s, k, require(s, k)); }
    double number(const std::string& s, const std::string& k, double def) const {
        return has(s, k) ? number(s, k) : def;
    }

    long integer(const std::string& s, const std::string& k) const {
        const Entry& e = require(s, k);
        const std::string v = trim(e.value);
        long out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            throw IoError(where(s, k, e.line) + ": expected an integer, got '" + v + "'");
        return out;
    }
    long integer(const std::string& s, const std::string& k, long def) const {
        return has(s, k) ? integer(s, k) : def;
    }

    std::vector<double> list(const std::string& s, const std::string& k) const {
        const Entry& e = require(s, k);
        std::vector<double> out;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number(s, k, {trim(item), e.line}));
        return out;
    }

    Vec3 vec(const std::string& s, const std::string& k) const {
        const auto v = list(s, k);
        if (v.size() != 3)
            throw IoError(where(s, k, require(s, k).line) + ": expected 3 comma-separated values, got " +
                          std::to_string(v.size()));
        return {v[0], v[1], v[2]};
    }
    Vec3 vec(const std::string& s, const std::string& k, const Vec3& def) const { return has(s, k) ? vec(s, k) : def; }

    int line(const std::string& s, const std::string& k) const { return has(s, k) ? sections_.at(s).at(k).line : 0; }

private:
    static double parse_number(const std::string& s, const std::string& k, const Entry& e) {
        const std::string v = trim(e.value);
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size() || v.empty())
            throw IoError(where(s, k, e.line) + ": expected a number, got '" + v + "'");
        return out;
    }

    std::map<std::string, Section> sections_;
};

void require_range(bool ok, const Reader& r, const std::string& s, const std::string& k, const std::string& what) {
    if (!ok) throw InvalidArgument(where(s, k, r.line(s, k)) + ": " + what);
}

template <typename Enum>
Enum pick(const Reader& r, const std::string& s, const std::string& k, const std::map<std::string, Enum>& options,
          Enum def) {
    if (!r.has(s, k)) return def;
    const std::string v = trim(r.text(s, k, ""));
    auto it = options.find(v);
    if (it == options.end()) {
        std::string allowed;
        for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + name;
        throw InvalidArgument(where(s, k, r.line(s, k)) + ": unknown value '" + v + "' (expected " + allowed + ")");
    }
    return it->second;
}

std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string fmt(const Vec3& v) { return fmt(v[0]) + ", " + fmt(v[1]) + ", " + fmt(v[2]); }

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    std::map<std::string, Section> sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw IoError("config line " + std::to_string(lineno) + ": malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            if (!schema().count(current))
                throw IoError("config line " + std::to_string(lineno) + ": unknown section [" + current + "]");
            if (sections.count(current))
                throw IoError("config line " + std::to_string(lineno) + ": duplicate section [" + current + "]");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        if (current.empty())
            throw IoError("config line " + std::to_string(lineno) + ": key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!schema().at(current).count(key))
            throw IoError("config line " + std::to_string(lineno) + ": unknown key '" + key + "' in [" + current + "]");
        if (sections[current].count(key))
            throw IoError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        if (value.empty()) throw IoError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        sections[current][key] = {value, lineno};
    }

    Reader r(std::move(sections));
    for (const char* s : {"grid", "field", "matter", "evolution"})
        if (!r.has_section(s)) throw InvalidArgument(std::string("config: missing required section [") + s + "]");

    ScenarioConfig c;

    // grid
    const long dims = r.integer("grid", "dims");
    require_range(dims >= 1 && dims <= 3, r, "grid", "dims", "must be 1, 2 or 3");
    c.grid.dims = static_cast<int>(dims);
    const auto pts = r.list("grid", "points");
    const auto ext = r.list("grid", "extent");
    require_range(pts.size() == static_cast<std::size_t>(dims), r, "grid", "points", "needs one value per axis");
    require_range(ext.size() == static_cast<std::size_t>(dims), r, "grid", "extent", "needs one value per axis");
    for (int a = 0; a < 3; ++a) {
        if (a < dims) {
            require_range(pts[a] == std::floor(pts[a]) && pts[a] >= 1, r, "grid", "points", "must be positive integers");
            c.grid.points[a] = static_cast<int>(pts[a]);
            c.grid.extent[a] = ext[a];
        } else {
            c.grid.points[a] = 1;
            c.grid.extent[a] = 1.0;
        }
    }
    GridPtr grid;
    try {
        grid = make_grid(c.grid);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(where("grid", "points", r.line("grid", "points")) + ": " + e.what());
    }

    // field
    const std::string kind = trim(r.require("field", "kind").value);
    try {
        if (kind == "zero") {
            c.field = EMFieldConfig::zero();
        } else if (kind == "uniform_e") {
            c.field = EMFieldConfig::uniform_e(r.vec("field", "E0"));
        } else if (kind == "uniform_b") {
            c.field = EMFieldConfig::uniform_b(r.vec("field", "B0"));
        } else if (kind == "linear_gradient_e") {
            const auto g = r.list("field", "G");
            if (g.size() != 9)
                throw InvalidArgument(where("field", "G", r.line("field", "G")) + ": expected 9 values (row-major)");
            Mat3 G;
            for (int i = 0; i < 9; ++i) G[i / 3][i % 3] = g[i];
            c.field = EMFieldConfig::linear_gradient_e(r.vec("field", "E0", Vec3{}), G);
        } else if (kind == "plane_wave") {
            c.field = EMFieldConfig::plane_wave(r.number("field", "amplitude"), r.vec("field", "k"), r.vec("field", "pol"));
        } else {
            throw InvalidArgument(where("field", "kind", r.line("field", "kind")) + ": unknown field kind '" + kind + "'");
        }
        check_commensurate(c.field, *grid);
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        if (msg.rfind("config", 0) == 0) throw;
        throw InvalidArgument(where("field", "kind", r.line("field", "kind")) + " (" + kind + "): " + msg);
    }

    // matter
    try {
        c.model = model_from_string(trim(r.require("matter", "model").value));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(where("matter", "model", r.line("matter", "model")) + ": " + e.what());
    }
    c.mass = r.number("matter", "m");
    require_range(c.mass > 0.0 && std::isfinite(c.mass), r, "matter", "m", "must be positive");
    c.charge = r.number("matter", "e");
    require_range(c.charge != 0.0 && std::isfinite(c.charge), r, "matter", "e", "must be nonzero");
    c.packet.center = r.vec("matter", "center", Vec3{});
    if (r.has("matter", "width")) {
        const auto w = r.list("matter", "width");
        require_range(w.size() == 1 || w.size() == 3, r, "matter", "width", "expects 1 or 3 values");
        c.packet.width = w.size() == 1 ? Vec3{w[0], w[0], w[0]} : Vec3{w[0], w[1], w[2]};
    }
    for (int a = 0; a < 3; ++a)
        require_range(c.packet.width[a] > 0.0, r, "matter", "width", "must be positive");
    c.packet.momentum = r.vec("matter", "momentum", Vec3{});
    c.packet.skew = r.number("matter", "skew", 0.0);

    // evolution
    c.dt = r.number("evolution", "dt");
    require_range(c.dt > 0.0 && std::isfinite(c.dt), r, "evolution", "dt", "must be positive");
    c.steps = r.integer("evolution", "steps");
    require_range(c.steps > 0, r, "evolution", "steps", "must be positive");
    c.dump_every = r.integer("evolution", "dump_every", 1);
    require_range(c.dump_every > 0, r, "evolution", "dump_every", "must be positive");
    c.propagator = pick<DiracPropagator>(r, "evolution", "propagator",
                                         {{"split", DiracPropagator::Split}, {"chebyshev", DiracPropagator::Chebyshev}},
                                         DiracPropagator::Split);
    if (c.propagator == DiracPropagator::Chebyshev && !c.field.is_static())
        require_range(false, r, "evolution", "propagator", "chebyshev requires a static field");

    // check
    c.stencil_order = static_cast<int>(r.integer("check", "stencil_order", 4));
    require_range(c.stencil_order == 2 || c.stencil_order == 4, r, "check", "stencil_order", "must be 2 or 4");
    auto tol = [&](const char* key, double def) {
        const double v = r.number("check", key, def);
        require_range(v > 0.0, r, "check", key, "must be positive");
        return v;
    };
    c.tolerances.energy_integral = tol("tol_energy", 1e-3);
    c.tolerances.momentum_integral = tol("tol_momentum", 1e-3);
    c.tolerances.momentum_point = tol("tol_point", 1e-3);
    c.tolerances.momentum_corrected = tol("tol_corrected", 1e-3);
    if (r.has("check", "sweep")) {
        const std::string s = trim(r.text("check", "sweep", ""));
        const auto open = s.find('(');
        const std::string name = trim(s.substr(0, open));
        if (name == "none" && open == std::string::npos) {
            c.sweep = SweepKind::None;
        } else {
            const auto close = s.find(')');
            require_range(open != std::string::npos && close == s.size() - 1, r, "check", "sweep",
                          "expected none, width-halving(N) or dt-halving(N)");
            if (name == "width-halving")
                c.sweep = SweepKind::WidthHalving;
            else if (name == "dt-halving")
                c.sweep = SweepKind::DtHalving;
            else
                require_range(false, r, "check", "sweep", "unknown sweep '" + name + "'");
            const std::string n = trim(s.substr(open + 1, close - open - 1));
            int levels = 0;
            auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), levels);
            require_range(ec == std::errc() && p == n.data() + n.size() && levels >= 2, r, "check", "sweep",
                          "level count must be an integer >= 2");
            c.sweep_levels = levels;
        }
    }
    c.expansion_point = pick<ExpansionPoint>(r, "check", "expansion_point",
                                             {{"centroid", ExpansionPoint::Centroid}, {"peak", ExpansionPoint::Peak}},
                                             ExpansionPoint::Centroid);
    c.mask_floor = r.number("check", "mask_floor", 1e-6);
    require_range(c.mask_floor > 0.0 && c.mask_floor < 1.0, r, "check", "mask_floor", "must lie in (0, 1)");
    c.tensor = pick<DiracTensorForm>(r, "check", "tensor",
                                     {{"covariant", DiracTensorForm::Covariant}, {"printed", DiracTensorForm::Printed}},
                                     DiracTensorForm::Covariant);
    c.classical_init = pick<ClassicalInit>(
        r, "check", "classical_init", {{"moments", ClassicalInit::Moments}, {"wavenumber", ClassicalInit::Wavenumber}},
        ClassicalInit::Moments);

    // output
    c.output_dir = r.text("output", "directory", "out");
    if (r.has("output", "formats")) {
        c.formats = {false, false, false};
        std::stringstream ss(r.text("output", "formats", ""));
        std::string f;
        while (std::getline(ss, f, ',')) {
            f = trim(f);
            if (f == "csv")
                c.formats.csv = true;
            else if (f == "report")
                c.formats.report = true;
            else if (f == "snapshot")
                c.formats.snapshot = true;
            else
                require_range(false, r, "output", "formats", "unknown format '" + f + "' (csv, report, snapshot)");
        }
    }
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_config_text(const ScenarioConfig& c) {
    std::ostringstream o;
    o << "[grid]\n";
    o << "dims = " << c.grid.dims << "\n";
    o << "points = ";
    for (int a = 0; a < c.grid.dims; ++a) o << (a ? ", " : "") << c.grid.points[a];
    o << "\nextent = ";
    for (int a = 0; a < c.grid.dims; ++a) o << (a ? ", " : "") << fmt(c.grid.extent[a]);
    o << "\n\n[field]\nkind = " << to_string(c.field.kind) << "\n";
    switch (c.field.kind) {
        case FieldKind::Zero: break;
        case FieldKind::UniformE: o << "E0 = " << fmt(c.field.E0) << "\n"; break;
        case FieldKind::UniformB: o << "B0 = " << fmt(c.field.B0) << "\n"; break;
        case FieldKind::LinearGradientE:
            o << "E0 = " << fmt(c.field.E0) << "\nG = ";
            for (int i = 0; i < 9; ++i) o << (i ? ", " : "") << fmt(c.field.G[i / 3][i % 3]);
            o << "\n";
            break;
        case FieldKind::PlaneWave:
            o << "amplitude = " << fmt(c.field.amplitude) << "\nk = " << fmt(c.field.k) << "\npol = " << fmt(c.field.pol)
              << "\n";
            break;
    }
    o << "\n[matter]\nmodel = " << to_string(c.model) << "\nm = " << fmt(c.mass) << "\ne = " << fmt(c.charge)
      << "\ncenter = " << fmt(c.packet.center) << "\nwidth = " << fmt(c.packet.width)
      << "\nmomentum = " << fmt(c.packet.momentum) << "\nskew = " << fmt(c.packet.skew) << "\n";
    o << "\n[evolution]\ndt = " << fmt(c.dt) << "\nsteps = " << c.steps << "\ndump_every = " << c.dump_every
      << "\npropagator = " << to_string(c.propagator) << "\n";
    o << "\n[check]\nstencil_order = " << c.stencil_order << "\ntol_energy = " << fmt(c.tolerances.energy_integral)
      << "\ntol_momentum = " << fmt(c.tolerances.momentum_integral)
      << "\ntol_point = " << fmt(c.tolerances.momentum_point)
      << "\ntol_corrected = " << fmt(c.tolerances.momentum_corrected) << "\nsweep = " << to_string(c.sweep);
    if (c.sweep != SweepKind::None) o << "(" << c.sweep_levels << ")";
    o << "\nexpansion_point = " << to_string(c.expansion_point) << "\nmask_floor = " << fmt(c.mask_floor)
      << "\ntensor = " << (c.tensor == DiracTensorForm::Covariant ? "covariant" : "printed")
      << "\nclassical_init = " << (c.classical_init == ClassicalInit::Moments ? "moments" : "wavenumber") << "\n";
    o << "\n[output]\ndirectory = " << c.output_dir.string() << "\nformats = ";
    std::string f;
    if (c.formats.csv) f += "csv";
    if (c.formats.report) f += std::string(f.empty() ? "" : ", ") + "report";
    if (c.formats.snapshot) f += std::string(f.empty() ? "" : ", ") + "snapshot";
    o << f << "\n";
    return o.str();
}

std::string defaults_text() {
    return "# Defaults applied to optional config keys.\n"
           "# Required without default: [grid] dims, points, extent; [field] kind and the\n"
           "# parameters of that kind; [matter] model, m, e; [evolution] dt, steps.\n"
           "[field] E0 (linear_gradient_e) = 0, 0, 0\n"
           "[matter] center = 0, 0, 0\n"
           "[matter] width = 1, 1, 1   # density standard deviation per axis\n"
           "[matter] momentum = 0, 0, 0\n"
           "[matter] skew = 0          # skew-normal shape along x\n"
           "[evolution] dump_every = 1\n"
           "[evolution] propagator = split   # split | chebyshev (static fields)\n"
           "[check] stencil_order = 4        # 2 | 4\n"
           "[check] tol_energy = 0.001\n"
           "[check] tol_momentum = 0.001\n"
           "[check] tol_point = 0.001\n"
           "[check] tol_corrected = 0.001\n"
           "[check] sweep = none             # none | width-halving(N) | dt-halving(N)\n"
           "[check] expansion_point = centroid   # centroid | peak\n"
           "[check] mask_floor = 1e-06\n"
           "[check] tensor = covariant       # covariant | printed\n"
           "[check] classical_init = moments # moments | wavenumber\n"
           "[output] directory = out\n"
           "[output] formats = csv, report, snapshot\n"
           "# Environment: EHRLAB_THREADS caps sweep workers (0 or unset = hardware concurrency).\n";
}

}  // namespace ehrlab
