#include "srec/harness/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace srec::harness {

void ExperimentConfig::validate() const {
    if (variants.empty() || schemes.empty() || snr_grid.empty() || eta_grid.empty())
        throw std::invalid_argument("ExperimentConfig: every grid must be non-empty");
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    if (crop == 0 || crop % 16 != 0)
        throw std::invalid_argument("ExperimentConfig: crop must be a positive multiple of 16");
}

std::uint64_t point_seed(std::uint64_t master_seed, Variant variant, modem::Scheme scheme,
                         std::size_t snr_index, std::size_t eta_index, std::size_t image_index,
                         std::size_t trial_index) {
    std::uint64_t h = numkit::hash_mix(master_seed, 0x737265632d707473ULL);
    h = numkit::hash_mix(h, static_cast<std::uint64_t>(variant));
    h = numkit::hash_mix(h, static_cast<std::uint64_t>(scheme));
    h = numkit::hash_mix(h, snr_index);
    h = numkit::hash_mix(h, eta_index);
    h = numkit::hash_mix(h, image_index);
    h = numkit::hash_mix(h, trial_index);
    return h;
}

SweepResult sweep(const ExperimentConfig& config, const PipelineModels& models,
                  const std::vector<numkit::Tensor<float>>& corpus, const cipher::KeySeed& key,
                  std::vector<RunOutput>* outputs) {
    config.validate();
    if (corpus.empty()) throw std::invalid_argument("sweep: empty corpus");

    struct Point {
        Variant variant;
        modem::Scheme scheme;
        std::size_t snr_index, eta_index, image_index, trial_index;
    };
    std::vector<Point> points;
    for (Variant v : config.variants)
        for (modem::Scheme s : config.schemes)
            for (std::size_t si = 0; si < config.snr_grid.size(); ++si)
                for (std::size_t ei = 0; ei < config.eta_grid.size(); ++ei)
                    for (std::size_t ii = 0; ii < corpus.size(); ++ii)
                        for (std::size_t ti = 0; ti < config.trials; ++ti)
                            points.push_back({v, s, si, ei, ii, ti});

    std::vector<RunRecord> records(points.size());
    std::vector<RunOutput> outs;
    if (outputs) outs.resize(points.size());

    auto run_point = [&](std::size_t idx) {
        const Point& pt = points[idx];
        const std::uint64_t seed = point_seed(config.master_seed, pt.variant, pt.scheme,
                                              pt.snr_index, pt.eta_index, pt.image_index,
                                              pt.trial_index);
        RunOptions opt;
        opt.variant = pt.variant;
        opt.scheme = pt.scheme;
        opt.snr_db = config.snr_grid[pt.snr_index];
        opt.eta = config.eta_grid[pt.eta_index];
        opt.key_seed = key;
        opt.stream_index = seed;  // never reused: unique per (point, trial)
        opt.noise_seed = numkit::hash_mix(seed, 0x6e6f697365ULL);
        opt.eavesdrop_seed = numkit::hash_mix(seed, 0x65766553ULL);
        opt.image_index = pt.image_index;
        opt.trial_index = pt.trial_index;
        try {
            RunOutput out = run_pipeline(corpus[pt.image_index], opt, models);
            records[idx] = out.record;
            if (outputs) outs[idx] = std::move(out);
        } catch (const std::exception& e) {
            RunRecord rec;
            rec.variant = variant_name(pt.variant);
            rec.scheme = modem::scheme_name(pt.scheme);
            rec.snr_db = opt.snr_db;
            rec.eta = opt.eta;
            rec.image_index = pt.image_index;
            rec.trial_index = pt.trial_index;
            rec.trial_seed = opt.noise_seed;
            rec.psnr_db = std::numeric_limits<double>::quiet_NaN();
            rec.error = e.what();
            records[idx] = rec;
        }
    };

    const std::size_t threads = std::max<std::size_t>(
        1, config.threads == 0 ? std::thread::hardware_concurrency() : config.threads);
    if (threads == 1 || points.size() < 2) {
        for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, points.size()); ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1))
                    run_point(i);
            });
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    result.records = std::move(records);
    std::sort(result.records.begin(), result.records.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.variant, a.scheme, a.snr_db, a.eta, a.image_index, a.trial_index) <
               std::tie(b.variant, b.scheme, b.snr_db, b.eta, b.image_index, b.trial_index);
    });
    result.summary = summarize(result.records);
    if (outputs) *outputs = std::move(outs);
    return result;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
    std::map<std::tuple<std::string, std::string, double, double>, SummaryRow> rows;
    for (const auto& r : records) {
        if (std::isnan(r.psnr_db)) continue;  // failed points are excluded from means
        auto key = std::make_tuple(r.variant, r.scheme, r.snr_db, r.eta);
        auto& row = rows[key];
        if (row.runs == 0) {
            row.variant = r.variant;
            row.scheme = r.scheme;
            row.snr_db = r.snr_db;
            row.eta = r.eta;
        }
        row.runs += 1;
        row.mean_psnr_db += r.psnr_db;
        row.mean_byte_errors += static_cast<double>(r.byte_error_count);
    }
    std::vector<SummaryRow> out;
    out.reserve(rows.size());
    for (auto& [key, row] : rows) {
        row.mean_psnr_db /= static_cast<double>(row.runs);
        row.mean_byte_errors /= static_cast<double>(row.runs);
        out.push_back(row);
    }
    return out;
}

}  // namespace srec::harness
