#pragma once

#include "anchors.hpp"
#include "image.hpp"
#include "rng.hpp"

#include <map>
#include <optional>
#include <unordered_map>

namespace ufv {

// One (LR, HR, rate, soft label) example. Paths are relative to the manifest
// directory; rates are exact fractions so nothing drifts through re-parsing.
struct SampleRecord {
    std::string lr_path;
    std::string hr_path;
    Fraction rate;
    std::vector<double> gt_weights;
};

struct DatasetManifest {
    AnchorConfig config;
    std::string split;  // train | test
    std::vector<SampleRecord> records;
    std::string base_dir;  // set on load; directory containing the manifest

    std::map<std::string, int> per_rate_counts() const;
};

struct BuildResult {
    std::string manifest_path;
    int n_images = 0;
    int n_records = 0;
    int n_skipped = 0;
};

// Builds hr/ and lr/<side>x<side>/ PNG trees plus manifest.jsonl and a JSON
// config echo under out_dir. Every readable corpus image contributes one LR
// per rate (balanced per-rate distribution by construction); HR images are
// bicubic-resized to hr_size beforehand when needed, and LR degradation runs
// on the quantized HR actually saved to disk.
BuildResult build_dataset(const std::string& corpus_dir, const AnchorConfig& config,
                          const std::string& split, double train_frac,
                          const std::string& out_dir);

DatasetManifest load_manifest(const std::string& manifest_path);
void write_manifest(const DatasetManifest& m, const std::string& manifest_path);

struct Batch {
    std::vector<const SampleRecord*> records;
    std::vector<Image> lr;
    std::vector<Image> hr;
};

// Streams batches over a manifest, optionally shuffled (seeded, reshuffled
// each epoch) and filtered to a rate subset. The final partial batch of an
// epoch is delivered. Decoded images are cached in memory as 8-bit.
class BatchLoader {
  public:
    BatchLoader(DatasetManifest manifest, int batch_size, bool shuffle, uint64_t seed,
                const std::vector<Fraction>& rate_filter = {});

    Batch next_batch();          // cycles epochs forever
    size_t size() const { return order_.size(); }
    size_t batches_per_epoch() const;
    int64_t epoch() const { return epoch_; }

    const DatasetManifest& manifest() const { return manifest_; }
    const SampleRecord& record(size_t filtered_idx) const;
    std::pair<Image, Image> load_pair(const SampleRecord& rec);  // {lr, hr}

  private:
    void start_epoch();
    Image cached(const std::string& rel_path);

    DatasetManifest manifest_;
    std::vector<size_t> active_;  // indices surviving the rate filter
    std::vector<size_t> order_;
    size_t cursor_ = 0;
    int64_t epoch_ = -1;
    int batch_size_;
    bool shuffle_;
    Rng rng_;
    uint64_t seed_;

    struct CachedImage {
        int h, w, c;
        std::vector<uint8_t> bytes;
    };
    std::unordered_map<std::string, CachedImage> cache_;
};

}  // namespace ufv
