#pragma once

// Scenario description and its line-oriented config grammar:
//
//   [section]
//   key = value        # comment
//
// Vectors are comma-separated (three values; grid points/extent take one
// value per active axis). Unknown sections and keys are rejected.

#include <filesystem>
#include <string>

#include "ehrlab/ehrenfest.hpp"
#include "ehrlab/em_fields.hpp"
#include "ehrlab/grid.hpp"
#include "ehrlab/matter.hpp"

namespace ehrlab {

enum class SweepKind { None, WidthHalving, DtHalving };
enum class ExpansionPoint { Centroid, Peak };
enum class ClassicalInit { Moments, Wavenumber };

std::string to_string(SweepKind s);
std::string to_string(ExpansionPoint e);

struct OutputFormats {
    bool csv = true;
    bool report = true;
    bool snapshot = true;
};

struct ScenarioConfig {
    GridSpec grid;
    EMFieldConfig field;

    Model model = Model::Dirac;
    double mass = 0.0;
    double charge = 0.0;
    PacketParams packet;

    double dt = 0.0;
    long steps = 0;
    long dump_every = 1;
    DiracPropagator propagator = DiracPropagator::Split;

    int stencil_order = 4;
    Tolerances tolerances;
    SweepKind sweep = SweepKind::None;
    int sweep_levels = 0;
    ExpansionPoint expansion_point = ExpansionPoint::Centroid;
    double mask_floor = 1e-6;
    DiracTensorForm tensor = DiracTensorForm::Covariant;
    ClassicalInit classical_init = ClassicalInit::Moments;

    std::filesystem::path output_dir = "out";
    OutputFormats formats;
};

/// Throws IoError (syntax, with line number) or InvalidArgument (missing key,
/// range violation, inconsistent field/grid).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Serialises a config in the same grammar; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ScenarioConfig& config);

/// Documented defaults for every optional key.
std::string defaults_text();

}  // namespace ehrlab
