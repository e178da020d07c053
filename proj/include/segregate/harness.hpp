#pragma once

#include "segregate/reduced_solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace segregate {

// Parsed run configuration.  Physical parameters (n, d, nu, v_inf, beta) have no defaults.
struct RunConfig {
    nlohmann::json raw;                    // the document as read, copied into manifests
    SystemParams params;
    std::optional<double> beta_fraction;  // beta = fraction * beta_k, resolved per k
    std::vector<int> k_list;
    std::vector<double> ratio_list;        // rho / (k ln k)
    nlohmann::json options = nlohmann::json::object();  // command-specific knobs
    std::string out_dir = ".";
    int workers = 0;
    std::uint64_t seed = 1;
    bool quick = false;
};

// Commands that only need the scalar profile ask for n (and p); the rest need every physical field.
bool needs_physical_params(const std::string& command);

// Throws ConfigInvalid with one message per offending field.
RunConfig parse_config(const nlohmann::json& doc, const std::string& command);
// Throws IoFailure naming the path when it cannot be read, ConfigInvalid on bad JSON.
RunConfig load_config(const std::string& path, const std::string& command);

// Parameters for one peak count, with beta resolved from beta_fraction when given.
SystemParams params_for(const RunConfig& cfg, int k);

// FNV-1a over the canonical dump of the document, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

// Shortest round-trip text with 17 significant digits.
std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
};

nlohmann::json to_json(const InteractionFit& fit);
InteractionFit fit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LeadingConstants& c);
LeadingConstants leading_from_json(const nlohmann::json& j);

// Leading constants, read from or written to $SEGREGATE_CACHE when the variable is set.
LeadingConstants cached_leading_constants(const SystemParams& params, const GroundStateProfile& profile,
                                          const FitOptions& fit = {});

// Writes manifest.json: config hash, config, command, files, module version, timestamp and extras.
nlohmann::json persist(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& files,
                       const nlohmann::json& extra = nlohmann::json::object());

struct CliHooks {
    // Runs the acceptance suite; returns the exit status.
    std::function<int(bool quick, int workers)> verify_all;
};

// Exit status 0 on success, 1 on validation failures, 2 on numerical failures.
int run_cli(int argc, char** argv, const CliHooks& hooks = {});

}  // namespace segregate
