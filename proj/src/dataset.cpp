#include "dataset.hpp"

#include "resize.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ufv {

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

json anchor_config_to_json(const AnchorConfig& c) {
    json j;
    j["hr_size"] = c.hr_size;
    j["anchors"] = json::array();
    for (const auto& a : c.anchors) j["anchors"].push_back(a.str());
    j["rates"] = json::array();
    for (const auto& r : c.rate_set) j["rates"].push_back(r.str());
    return j;
}

AnchorConfig anchor_config_from_json(const json& j) {
    AnchorConfig c;
    c.hr_size = j.at("hr_size").get<int>();
    c.anchors.clear();
    for (const auto& a : j.at("anchors")) c.anchors.push_back(parse_fraction(a.get<std::string>()));
    c.rate_set.clear();
    for (const auto& r : j.at("rates")) c.rate_set.push_back(parse_fraction(r.get<std::string>()));
    return c;
}

}  // namespace

std::map<std::string, int> DatasetManifest::per_rate_counts() const {
    std::map<std::string, int> counts;
    for (const auto& r : records) counts[r.rate.str()]++;
    return counts;
}

BuildResult build_dataset(const std::string& corpus_dir, const AnchorConfig& config,
                          const std::string& split, double train_frac,
                          const std::string& out_dir) {
    config.validate();
    if (split != "train" && split != "test")
        throw InvalidArgument("split must be 'train' or 'test', got '" + split + "'");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw InvalidArgument("train_frac must be in (0,1)");
    if (config.rate_set.empty()) throw InvalidArgument("rate set is empty");
    if (!fs::is_directory(corpus_dir))
        throw InvalidArgument("corpus directory does not exist: " + corpus_dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidArgument("no PNG/JPEG images in corpus: " + corpus_dir);

    // deterministic split by sorted filename index
    size_t n_train = size_t(double(files.size()) * train_frac);
    n_train = std::clamp<size_t>(n_train, 1, files.size() - 1);
    std::vector<fs::path> chosen;
    if (split == "train")
        chosen.assign(files.begin(), files.begin() + ptrdiff_t(n_train));
    else
        chosen.assign(files.begin() + ptrdiff_t(n_train), files.end());

    fs::create_directories(fs::path(out_dir) / "hr");
    std::vector<int> lr_sides;
    for (const auto& r : config.rate_set) {
        int side = config.lr_side(r);
        lr_sides.push_back(side);
        fs::create_directories(fs::path(out_dir) / "lr" /
                               (std::to_string(side) + "x" + std::to_string(side)));
    }

    DatasetManifest manifest;
    manifest.config = config;
    manifest.split = split;

    // independent per image; records assembled in sorted-filename order
    std::vector<std::vector<SampleRecord>> per_image(chosen.size());
    std::vector<uint8_t> ok(chosen.size(), 0);
    BuildResult result;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (size_t ci = 0; ci < chosen.size(); ++ci) {
        const auto& src = chosen[ci];
        Image hr;
        try {
            hr = load_image(src.string());
        } catch (const std::exception& e) {
            log_warn("skipping unreadable image " + src.string() + ": " + e.what());
            continue;
        }
        if (hr.h != config.hr_size || hr.w != config.hr_size)
            hr = bicubic_resize(hr, config.hr_size, config.hr_size);
        // quantize once so LR generation sees exactly what lands on disk
        hr = from_u8(to_u8(hr), hr.h, hr.w, hr.c);

        std::string stem = src.stem().string();
        std::string hr_rel = "hr/" + stem + ".png";
        save_png(hr, out_dir + "/" + hr_rel);

        for (size_t ri = 0; ri < config.rate_set.size(); ++ri) {
            const Fraction& rate = config.rate_set[ri];
            int side = lr_sides[ri];
            Image lr = bicubic_resize(hr, side, side);
            std::string lr_rel = "lr/" + std::to_string(side) + "x" + std::to_string(side) + "/" +
                                 stem + ".png";
            save_png(lr, out_dir + "/" + lr_rel);

            SampleRecord rec;
            rec.lr_path = lr_rel;
            rec.hr_path = hr_rel;
            rec.rate = rate;
            rec.gt_weights = compute_anchor_weights(rate, config.anchors);
            per_image[ci].push_back(std::move(rec));
        }
        ok[ci] = 1;
    }
    for (size_t ci = 0; ci < chosen.size(); ++ci) {
        if (!ok[ci]) {
            ++result.n_skipped;
            continue;
        }
        ++result.n_images;
        for (auto& rec : per_image[ci]) manifest.records.push_back(std::move(rec));
    }
    if (result.n_images == 0) throw RuntimeFailure("no readable image in corpus: " + corpus_dir);

    result.n_records = int(manifest.records.size());
    result.manifest_path = out_dir + "/manifest.jsonl";
    write_manifest(manifest, result.manifest_path);

    // config echo
    json echo;
    echo["anchor_config"] = anchor_config_to_json(config);
    echo["split"] = split;
    echo["train_frac"] = train_frac;
    echo["corpus_dir"] = corpus_dir;
    echo["n_images"] = result.n_images;
    echo["n_records"] = result.n_records;
    echo["n_skipped"] = result.n_skipped;
    std::ofstream cfg(out_dir + "/dataset_config.json");
    cfg << echo.dump(2) << "\n";

    return result;
}

void write_manifest(const DatasetManifest& m, const std::string& manifest_path) {
    std::ofstream f(manifest_path);
    if (!f) throw RuntimeFailure("cannot write manifest: " + manifest_path);
    json head;
    head["type"] = "ufv-dataset";
    head["split"] = m.split;
    head["count"] = m.records.size();
    head["anchor_config"] = anchor_config_to_json(m.config);
    json per_rate = json::object();
    for (const auto& [rate, count] : m.per_rate_counts()) per_rate[rate] = count;
    head["per_rate"] = per_rate;
    f << head.dump() << "\n";
    for (const auto& rec : m.records) {
        json j;
        j["lr"] = rec.lr_path;
        j["hr"] = rec.hr_path;
        j["rate"] = rec.rate.str();
        j["weights"] = rec.gt_weights;
        f << j.dump() << "\n";
    }
}

DatasetManifest load_manifest(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw RuntimeFailure("cannot open manifest: " + manifest_path);
    std::string line;
    if (!std::getline(f, line)) throw RuntimeFailure("empty manifest: " + manifest_path);

    DatasetManifest m;
    try {
        json head = json::parse(line);
        if (head.value("type", "") != "ufv-dataset")
            throw RuntimeFailure("not a dataset manifest: " + manifest_path);
        m.split = head.value("split", "");
        m.config = anchor_config_from_json(head.at("anchor_config"));
        size_t lineno = 1;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j = json::parse(line);
            SampleRecord rec;
            rec.lr_path = j.at("lr").get<std::string>();
            rec.hr_path = j.at("hr").get<std::string>();
            rec.rate = parse_fraction(j.at("rate").get<std::string>());
            rec.gt_weights = j.at("weights").get<std::vector<double>>();
            m.records.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw RuntimeFailure("malformed manifest " + manifest_path + ": " + e.what());
    }
    m.base_dir = fs::path(manifest_path).parent_path().string();
    return m;
}

// ------------------------------------------------------------- BatchLoader --

BatchLoader::BatchLoader(DatasetManifest manifest, int batch_size, bool shuffle, uint64_t seed,
                         const std::vector<Fraction>& rate_filter)
    : manifest_(std::move(manifest)),
      batch_size_(batch_size),
      shuffle_(shuffle),
      rng_(seed),
      seed_(seed) {
    if (batch_size_ < 1) throw InvalidArgument("batch_size must be >= 1");
    for (size_t i = 0; i < manifest_.records.size(); ++i) {
        if (rate_filter.empty()) {
            active_.push_back(i);
        } else {
            for (const auto& rf : rate_filter)
                if (manifest_.records[i].rate.same_value(rf)) {
                    active_.push_back(i);
                    break;
                }
        }
    }
    if (active_.empty())
        throw RuntimeFailure("no samples match the requested rates in manifest under " +
                             manifest_.base_dir);
    order_ = active_;
    start_epoch();
}

size_t BatchLoader::batches_per_epoch() const {
    return (order_.size() + size_t(batch_size_) - 1) / size_t(batch_size_);
}

const SampleRecord& BatchLoader::record(size_t filtered_idx) const {
    return manifest_.records[active_[filtered_idx]];
}

void BatchLoader::start_epoch() {
    ++epoch_;
    cursor_ = 0;
    if (shuffle_) {
        Rng r = Rng(seed_).fork(uint64_t(epoch_));
        shuffle_vec<size_t>(order_, r);
    }
}

Image BatchLoader::cached(const std::string& rel_path) {
    auto it = cache_.find(rel_path);
    if (it == cache_.end()) {
        std::string full = manifest_.base_dir.empty() ? rel_path
                                                      : manifest_.base_dir + "/" + rel_path;
        if (!fs::exists(full))
            throw RuntimeFailure("manifest references missing image: " + full);
        Image img = load_image(full);
        CachedImage ci{img.h, img.w, img.c, to_u8(img)};
        it = cache_.emplace(rel_path, std::move(ci)).first;
    }
    const CachedImage& ci = it->second;
    return from_u8(ci.bytes, ci.h, ci.w, ci.c);
}

std::pair<Image, Image> BatchLoader::load_pair(const SampleRecord& rec) {
    Image lr = cached(rec.lr_path);
    Image hr = cached(rec.hr_path);
    return {std::move(lr), std::move(hr)};
}

Batch BatchLoader::next_batch() {
    Batch b;
    size_t take = std::min(size_t(batch_size_), order_.size() - cursor_);
    b.records.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        const SampleRecord& rec = manifest_.records[order_[cursor_ + i]];
        b.records.push_back(&rec);
        auto [lr, hr] = load_pair(rec);
        b.lr.push_back(std::move(lr));
        b.hr.push_back(std::move(hr));
    }
    cursor_ += take;
    if (cursor_ >= order_.size()) start_epoch();
    return b;
}

}  // namespace ufv
