#include "runmeta.hpp"

#include "sha256.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ufv {

std::string hash_of_json(const json& j) { return sha256_hex(j.dump()); }

std::string write_run_manifest(RunManifest m, const std::string& dir) {
    fs::create_directories(dir);
    if (m.created_utc.empty()) m.created_utc = utc_timestamp();
    m.tool_version = kToolVersion;
    m.config_hash = hash_of_json(m.effective_config);

    {
        std::ofstream f(dir + "/effective_config.json");
        f << m.effective_config.dump(2) << "\n";
        if (!f) throw RuntimeFailure("cannot write effective config in " + dir);
    }

    json j;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    if (!m.dataset_path.empty()) {
        j["dataset"] = {{"path", m.dataset_path}, {"sha256", m.dataset_sha256}};
    }
    json lin = json::array();
    for (const auto& e : m.lineage)
        lin.push_back({{"role", e.role}, {"path", e.path}, {"sha256", e.sha256}});
    j["lineage"] = lin;
    j["tool_version"] = m.tool_version;
    j["created_utc"] = m.created_utc;

    std::string path = dir + "/run.json";
    std::ofstream f(path);
    f << j.dump(2) << "\n";
    if (!f) throw RuntimeFailure("cannot write run manifest in " + dir);
    return path;
}

RunManifest read_run_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw RuntimeFailure("cannot open run manifest: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw RuntimeFailure("malformed run manifest " + path + ": " + e.what());
    }
    RunManifest m;
    m.command = j.value("command", "");
    m.config_hash = j.value("config_hash", "");
    m.seed = j.value("seed", uint64_t(0));
    if (j.contains("dataset")) {
        m.dataset_path = j["dataset"].value("path", "");
        m.dataset_sha256 = j["dataset"].value("sha256", "");
    }
    for (const auto& e : j.value("lineage", json::array()))
        m.lineage.push_back({e.value("role", ""), e.value("path", ""), e.value("sha256", "")});
    m.tool_version = j.value("tool_version", "");
    m.created_utc = j.value("created_utc", "");
    return m;
}

std::vector<std::string> lint_artifacts(const std::string& root) {
    std::vector<std::string> problems;
    if (!fs::exists(root)) return {"lint root does not exist: " + root};

    auto is_artifact = [](const fs::path& p) {
        std::string name = p.filename().string();
        std::string ext = p.extension().string();
        return ext == ".ufvckpt" || name == "report.csv" || name == "samples.csv" ||
               name == "loss_curve.csv" || name == "montage.png";
    };

    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator();
         ++it) {
        if (!it->is_regular_file()) continue;
        const fs::path p = it->path();
        if (!is_artifact(p)) continue;

        const fs::path dir = p.parent_path();
        if (!fs::exists(dir / "run.json")) {
            problems.push_back("orphan artifact (no run.json beside it): " + p.string());
            continue;
        }
        if (p.extension() == ".ufvckpt") {
            try {
                LoadedCheckpoint ck = load_checkpoint(p.string());
                if (ck.meta.run_manifest.empty())
                    problems.push_back("checkpoint lacks a run manifest reference: " + p.string());
                else if (!fs::exists(dir / ck.meta.run_manifest))
                    problems.push_back("checkpoint references missing run manifest: " + p.string());
            } catch (const std::exception& e) {
                problems.push_back(std::string("unreadable checkpoint: ") + e.what());
            }
        }
    }

    // dataset references recorded in run manifests must still hash-match
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator();
         ++it) {
        if (!it->is_regular_file() || it->path().filename() != "run.json") continue;
        try {
            RunManifest m = read_run_manifest(it->path().string());
            if (!m.dataset_path.empty()) {
                fs::path mp(m.dataset_path);
                if (mp.is_relative()) mp = it->path().parent_path() / mp;
                if (!fs::exists(mp)) {
                    problems.push_back("run manifest references missing dataset: " +
                                       it->path().string());
                } else if (!m.dataset_sha256.empty() &&
                           sha256_file_hex(mp.string()) != m.dataset_sha256) {
                    problems.push_back("dataset hash drifted since the run: " +
                                       it->path().string());
                }
            }
        } catch (const std::exception& e) {
            problems.push_back(std::string("bad run manifest: ") + e.what());
        }
    }
    return problems;
}

}  // namespace ufv
