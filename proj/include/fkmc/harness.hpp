// Experiment harness: flat key=value configuration files with command-line
// overrides, boundary construction from config, experiment dispatch, and
// run records (a deterministic CSV results table plus a JSON metadata
// sidecar carrying the config echo, seed, generator id and wall time).
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fkmc/geometry.hpp"

namespace fkmc {

inline constexpr const char* kProgramVersion = "fkmc 0.1.0";
inline constexpr const char* kGeneratorId = "philox4x32-10";

class ExperimentConfig {
  public:
    ExperimentConfig() = default;
    // Lines of `key = value`; blank lines and #-comments ignored.
    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def) const;
    int64_t get_int(const std::string& key, int64_t def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::vector<double> get_list(const std::string& key,
                                 const std::vector<double>& def) const;

    std::string require_string(const std::string& key) const;
    double require_double(const std::string& key) const;
    int64_t require_int(const std::string& key) const;

    // Sorted `key=value` lines; from_string(serialize()) round-trips.
    std::string serialize() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

// boundary=koch requires level; boundary=line requires half_width.
PrefractalBoundary boundary_from_config(const ExperimentConfig& cfg);

struct RunRecord {
    std::string family;
    std::string csv;        // deterministic: identical seed+config => identical bytes
    std::string meta_json;  // config echo, seed, rng id, wall time (not deterministic)
};

// Families: geometry, occupation, pz, divergence, kernel, crossing, decay,
// harmonic, positivity.  Throws std::invalid_argument or std::runtime_error
// on config errors (the CLI maps those to exit code 2).
RunRecord run_experiment(const std::string& family, const ExperimentConfig& cfg,
                         uint64_t seed);

// Writes <out_prefix>.csv and <out_prefix>.json, creating directories.
void write_run_record(const RunRecord& rec, const std::string& out_prefix);

}  // namespace fkmc
