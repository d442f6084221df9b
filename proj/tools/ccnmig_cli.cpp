#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ccnmig/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitMigration = 3;
constexpr int kExitEquivalence = 4;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string with_thousands(uint64_t v) {
    std::string s = std::to_string(v);
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
    return s;
}

int cmd_count(const std::string& config_path) {
    ccnmig::VmConfig cfg = ccnmig::VmConfig::from_json(slurp(config_path));
    cfg.validate();
    ccnmig::ObjectCount c = ccnmig::object_count(cfg);
    for (size_t i = 0; i < c.per_disk.size(); ++i)
        std::cout << "disk " << cfg.disks[i].disk_name << ": "
                  << with_thousands(c.per_disk[i]) << " objects\n";
    std::cout << "disk total: " << with_thousands(c.disk_total) << "\n"
              << "ram pages:  " << with_thousands(c.ram_pages) << "\n"
              << "cpu state:  " << with_thousands(c.cpu_objects) << "\n"
              << "config:     " << with_thousands(c.config_objects) << "\n"
              << "net:        " << with_thousands(c.net_objects) << "\n"
              << "total:      " << with_thousands(c.total) << "\n";
    return kExitOk;
}

int cmd_gen(const std::string& config_path, uint64_t seed, const std::string& out_path,
            bool list_names) {
    ccnmig::VmConfig cfg = ccnmig::VmConfig::from_json(slurp(config_path));
    cfg.validate();
    ccnmig::VmImage image = ccnmig::VmImage::build(cfg, seed);
    std::ostringstream out;
    out << "# image for " << cfg.vm_name.to_text() << " seed=" << seed << "\n";
    if (list_names) {
        for (const ccnmig::Name& n : ccnmig::enumerate_names(cfg)) out << n.to_text() << "\n";
    } else {
        for (const ccnmig::Locator& loc : image.all_locators())
            out << ccnmig::locator_to_string(cfg, loc) << " "
                << image.resource_size(loc) << "B\n";
    }
    if (out_path.empty())
        std::cout << out.str();
    else
        spill(out_path, out.str());
    return kExitOk;
}

int cmd_migrate(const std::string& scenario_path, std::optional<uint64_t> seed,
                const std::string& out_path) {
    ccnmig::Scenario sc = ccnmig::Scenario::from_json(slurp(scenario_path));
    if (seed) sc.seed = *seed;
    ccnmig::MetricsReport report = ccnmig::run_scenario(sc);
    std::string text = report.to_json();
    if (out_path.empty())
        std::cout << text << "\n";
    else
        spill(out_path, text);
    if (!report.completed) {
        std::cerr << "migration failed: " << report.abort_cause << "\n";
        return kExitMigration;
    }
    if (!report.equivalence.pass) {
        std::cerr << "equivalence FAIL: " << report.equivalence.divergence << "\n";
        return kExitEquivalence;
    }
    return kExitOk;
}

int cmd_report(const std::string& report_path) {
    nlohmann::json j = nlohmann::json::parse(slurp(report_path));
    std::cout << "migration " << (j.value("completed", false) ? "completed" : "ABORTED")
              << " (seed " << j.value("seed", 0) << ", " << j.value("naming", "?") << " naming, "
              << j.value("routing", "?") << " routing)\n";
    std::cout << "push rounds: " << j.value("push_rounds", 0) << "\n";
    for (const auto& c : j.value("checkpoints", nlohmann::json::array()))
        std::cout << "  ver=" << c.value("version", 0) << " " << c.value("phase", "?") << "  "
                  << with_thousands(c.value("selection_bytes", uint64_t{0})) << "B in "
                  << c.value("entries", 0) << " entries\n";
    if (j.contains("downtime_us") && !j["downtime_us"].is_null())
        std::cout << "downtime: " << j["downtime_us"].get<uint64_t>() << " us\n";
    if (j.contains("wire"))
        for (auto& [phase, s] : j["wire"].items())
            std::cout << "wire[" << phase << "]: "
                      << with_thousands(s.value("bytes_sent", uint64_t{0})) << "B, "
                      << s.value("interests_sent", 0) << " interests, "
                      << s.value("packets_lost", 0) << " lost\n";
    if (j.contains("dedup"))
        std::cout << "dedup: " << j["dedup"].value("unique_objects", 0) << " unique / "
                  << j["dedup"].value("logical_references", 0) << " logical, saved "
                  << with_thousands(j["dedup"].value("saved_bytes", uint64_t{0})) << "B\n";
    if (j.contains("equivalence"))
        std::cout << "equivalence: " << j["equivalence"].value("verdict", "?") << "\n";
    return kExitOk;
}

int cmd_compare_naming(const std::string& config_path, uint64_t version) {
    ccnmig::VmConfig cfg = ccnmig::VmConfig::from_json(slurp(config_path));
    cfg.validate();
    ccnmig::NamingComparison c = ccnmig::compare_naming(cfg, version);
    std::cout << "objects:          " << with_thousands(c.objects) << "\n"
              << "payload bytes:    " << with_thousands(c.payload_bytes) << "\n"
              << "hash scheme:      " << with_thousands(c.hash_scheme_bytes) << "\n"
              << "metadata scheme:  " << with_thousands(c.metadata_scheme_bytes) << "\n"
              << "link scheme:      " << with_thousands(c.link_scheme_bytes) << "\n"
              << "hash vs metadata: saves "
              << with_thousands(c.metadata_scheme_bytes - c.hash_scheme_bytes) << "B\n"
              << "hash vs link:     saves "
              << with_thousands(c.link_scheme_bytes - c.hash_scheme_bytes) << "B\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VM migration over named content: simulator and tooling"};
    app.require_subcommand(1);

    std::string config_path, scenario_path, out_path, report_path;
    uint64_t gen_seed = 1, naming_version = 0;
    std::optional<uint64_t> migrate_seed;
    bool list_names = false;

    auto* count = app.add_subcommand("count", "print the object-count breakdown for a VM config");
    count->add_option("--config", config_path, "VM config JSON")->required();

    auto* gen = app.add_subcommand("gen", "generate a VM image listing from a config");
    gen->add_option("--config", config_path, "VM config JSON")->required();
    gen->add_option("--seed", gen_seed, "content seed");
    gen->add_option("--out", out_path, "output path (default stdout)");
    gen->add_flag("--names", list_names, "list full content names instead of sizes");

    auto* migrate = app.add_subcommand("migrate", "run a migration scenario, write the report");
    migrate->add_option("--scenario", scenario_path, "scenario JSON")->required();
    migrate->add_option("--seed", migrate_seed, "override the scenario seed");
    migrate->add_option("--out", out_path, "report path (default stdout)");

    auto* report = app.add_subcommand("report", "render a report JSON as text");
    report->add_option("--in", report_path, "report JSON")->required();

    auto* naming = app.add_subcommand("compare-naming",
                                      "naming-scheme byte overhead table for a config");
    naming->add_option("--config", config_path, "VM config JSON")->required();
    naming->add_option("--version", naming_version, "checkpoint version for name lengths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (count->parsed()) return cmd_count(config_path);
        if (gen->parsed()) return cmd_gen(config_path, gen_seed, out_path, list_names);
        if (migrate->parsed()) return cmd_migrate(scenario_path, migrate_seed, out_path);
        if (report->parsed()) return cmd_report(report_path);
        if (naming->parsed()) return cmd_compare_naming(config_path, naming_version);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
