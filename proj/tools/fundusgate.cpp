// fundusgate: two-phase fundus screening front end.
//
// Subcommands: synth, train, prescreen, prefilter, evaluate, pipeline.
// Exit codes: 0 ok, 2 usage/bad parameters, 3 I/O, 4 data/semantic.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fundus/fundus.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Semantic failures that must map to exit code 4 (degenerate labels,
/// missing ground truth) rather than the generic runtime_error 3.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const fundus::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

// --- config plumbing: defaults <- config file <- CLI flags ---

struct ConfigCli {
    std::string path;
    std::string mode;
    std::vector<std::function<void(fundus::RunConfig&)>> overrides;
};

void add_config_options(CLI::App* cmd, ConfigCli& cc) {
    cmd->add_option("--config", cc.path, "key=value config file; the flags below override it");
    auto add_int = [cmd, &cc](const std::string& name, int fundus::RunConfig::*field,
                              const std::string& desc) {
        cmd->add_option_function<int>(name,
                                      [&cc, field](int v) {
                                          cc.overrides.push_back(
                                              [field, v](fundus::RunConfig& c) { c.*field = v; });
                                      },
                                      desc);
    };
    auto add_dbl = [cmd, &cc](const std::string& name, double fundus::RunConfig::*field,
                              const std::string& desc) {
        cmd->add_option_function<double>(name,
                                         [&cc, field](double v) {
                                             cc.overrides.push_back(
                                                 [field, v](fundus::RunConfig& c) { c.*field = v; });
                                         },
                                         desc);
    };
    add_int("--s_prescreen", &fundus::RunConfig::s_prescreen, "pre-screening subimage size");
    add_int("--t", &fundus::RunConfig::t, "inhomogeneity threshold");
    cmd->add_option("--mode", cc.mode, "feature mode: inhomogeneity|stddev|combined");
    add_int("--ahe_tile_grid", &fundus::RunConfig::ahe_tile_grid, "AHE tile grid");
    add_dbl("--ahe_clip_fraction", &fundus::RunConfig::ahe_clip_fraction, "AHE clip fraction");
    add_int("--fov_threshold", &fundus::RunConfig::fov_threshold, "field-of-view gray threshold");
    add_int("--background_median", &fundus::RunConfig::background_median,
            "background median kernel (A)");
    add_int("--denoise_median", &fundus::RunConfig::denoise_median, "denoising median kernel (B)");
    add_dbl("--unsharp_amount", &fundus::RunConfig::unsharp_amount, "unsharp masking amount");
    add_dbl("--unsharp_radius", &fundus::RunConfig::unsharp_radius, "unsharp Gaussian sigma");
    add_int("--s_prefilter", &fundus::RunConfig::s_prefilter, "pre-filtering region size");
    add_int("--n", &fundus::RunConfig::n, "minimum candidate cardinality");
    add_int("--connectivity", &fundus::RunConfig::connectivity, "pixel connectivity: 4|8");
    add_int("--keep", &fundus::RunConfig::keep, "tiles kept by backward elimination (0 = all)");
    add_int("--workers", &fundus::RunConfig::workers, "worker threads");
}

fundus::RunConfig resolve_config(const ConfigCli& cc) {
    fundus::RunConfig cfg;
    if (!cc.path.empty())
        cfg = fundus::parse_config(fundus::read_file_text(cc.path), cfg);
    for (const auto& apply : cc.overrides)
        apply(cfg);
    if (!cc.mode.empty()) {
        try {
            cfg.mode = fundus::parse_feature_mode(cc.mode);
        } catch (const fundus::parse_error& e) {
            throw std::invalid_argument(e.what());
        }
    }
    fundus::validate(cfg);
    return cfg;
}

// --- worker pool: slot-addressed results keep manifest order ---

void parallel_rows(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t count = std::min(static_cast<std::size_t>(std::max(1, workers)), n);
    if (count <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;)
                fn(i);
        });
    for (auto& th : pool)
        th.join();
}

std::optional<fundus::BinaryMask> load_optional_mask(const fundus::DatasetManifest& man,
                                                     const std::string& rel) {
    if (rel.empty())
        return std::nullopt;
    return fundus::load_mask_pgm(man.resolve(rel));
}

fundus::FeatureVector row_features(const fundus::DatasetManifest& man,
                                   const fundus::ManifestRow& row,
                                   const fundus::FeatureSpec& spec, const fundus::AheParams& ahe,
                                   int fov_threshold) {
    const fundus::RgbImage img = fundus::load_image_any(man.resolve(row.image));
    const std::optional<fundus::BinaryMask> fov = load_optional_mask(man, row.fov);
    const fundus::GrayImage pre =
        fundus::prescreen_preprocess(img, ahe, fov_threshold, fov ? &*fov : nullptr);
    return fundus::extract_features(pre, spec);
}

// --- command cores, shared between the plain commands and `pipeline` ---

fundus::NaiveBayesModel do_train(const fundus::DatasetManifest& man,
                                 const fundus::RunConfig& cfg) {
    const fundus::FeatureSpec spec = fundus::feature_spec(cfg);
    const fundus::AheParams ahe = fundus::ahe_params(cfg);

    std::vector<std::size_t> labeled;
    long n_abnormal = 0, n_process = 0;
    for (std::size_t i = 0; i < man.rows.size(); ++i) {
        const auto label = man.rows[i].class_label();
        if (!label)
            continue;
        labeled.push_back(i);
        (*label == fundus::ClassLabel::Abnormal ? n_abnormal : n_process) += 1;
    }
    if (labeled.empty())
        throw data_error("train: manifest has no labeled rows");
    if (n_abnormal == 0 || n_process == 0)
        throw data_error("train: manifest must contain both classes");

    std::vector<fundus::FeatureVector> feats(labeled.size());
    std::vector<std::string> errors(labeled.size());
    parallel_rows(labeled.size(), cfg.workers, [&](std::size_t k) {
        try {
            feats[k] = row_features(man, man.rows[labeled[k]], spec, ahe, cfg.fov_threshold);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });
    for (std::size_t k = 0; k < labeled.size(); ++k)
        if (!errors[k].empty())
            throw std::runtime_error(man.rows[labeled[k]].image + ": " + errors[k]);

    const int total_tiles =
        static_cast<int>(feats[0].size()) / fundus::values_per_tile(spec.mode);
    fundus::TrainingSet data;
    data.feature_kinds = fundus::feature_kinds(spec, total_tiles);
    for (std::size_t k = 0; k < labeled.size(); ++k)
        data.rows.push_back({std::move(feats[k]), *man.rows[labeled[k]].class_label()});

    fundus::NaiveBayesModel model;
    if (cfg.keep > 0 && cfg.keep < total_tiles) {
        const fundus::FeatureSubset subset = fundus::backward_elimination(data, spec, cfg.keep);
        fundus::TrainingSet projected;
        projected.feature_kinds =
            fundus::feature_kinds(spec, static_cast<int>(subset.selected_tiles.size()));
        for (const auto& row : data.rows)
            projected.rows.push_back(
                {fundus::project(row.values, subset, spec.mode, total_tiles), row.label});
        model = fundus::train(projected, spec, total_tiles, subset);
    } else {
        model = fundus::train(data, spec, total_tiles, {});
    }

    std::cout << "trained on " << labeled.size() << " images (abnormal " << n_abnormal
              << ", process_further " << n_process << ")\n";
    std::cout << "tiles: " << total_tiles << " total, selected:";
    if (model.subset.empty()) {
        std::cout << " all";
    } else {
        for (int t : model.subset.selected_tiles)
            std::cout << " " << t;
    }
    std::cout << "\n";
    return model;
}

ordered_json do_prescreen(const fundus::DatasetManifest& man,
                          const fundus::NaiveBayesModel& model, const fundus::RunConfig& cfg,
                          bool& any_row_error) {
    const fundus::AheParams ahe = fundus::ahe_params(cfg);
    struct RowOut {
        ordered_json row;
        bool process_further = false;
        bool error = false;
    };
    std::vector<RowOut> outs(man.rows.size());
    parallel_rows(man.rows.size(), cfg.workers, [&](std::size_t i) {
        const auto& r = man.rows[i];
        try {
            const fundus::FeatureVector full =
                row_features(man, r, model.spec, ahe, cfg.fov_threshold);
            const fundus::Prediction p = fundus::predict(model, full);
            outs[i].row = fundus::prescreen_row(r.image, p.label, p.posterior);
            outs[i].process_further = p.label == fundus::ClassLabel::ProcessFurther;
        } catch (const std::exception& e) {
            outs[i].row = fundus::error_row(r.image, e.what());
            outs[i].error = true;
        }
    });

    ordered_json report = fundus::make_report("prescreen");
    ordered_json process_further = ordered_json::array();
    for (auto& o : outs) {
        if (o.error)
            any_row_error = true;
        if (o.process_further)
            process_further.push_back(o.row["image"]);
        report["results"].push_back(std::move(o.row));
    }
    report["process_further"] = std::move(process_further);
    return report;
}

ordered_json do_prefilter(const fundus::DatasetManifest& man, const fundus::RunConfig& cfg,
                          const std::string& crops_dir, bool& any_row_error) {
    const fundus::PrefilterPreprocessParams pp = fundus::prefilter_preprocess_params(cfg);
    const fundus::PrefilterParams params = fundus::prefilter_params(cfg);
    if (!crops_dir.empty())
        fs::create_directories(crops_dir);

    struct RowOut {
        ordered_json row;
        bool error = false;
    };
    std::vector<RowOut> outs(man.rows.size());
    parallel_rows(man.rows.size(), cfg.workers, [&](std::size_t i) {
        const auto& r = man.rows[i];
        try {
            const fundus::RgbImage img = fundus::load_image_any(man.resolve(r.image));
            const std::optional<fundus::BinaryMask> fov = load_optional_mask(man, r.fov);
            fundus::AnatomyMasks anat;
            anat.vessels = load_optional_mask(man, r.vessels);
            anat.optic_disc = load_optional_mask(man, r.optic_disc);
            anat.macula = load_optional_mask(man, r.macula);
            const fundus::PrefilterResult res = fundus::prefilter_image(
                img, anat, pp, params, fov ? &*fov : nullptr, cfg.fov_threshold);
            outs[i].row = fundus::prefilter_row(r.image, img.width, img.height, res);
            if (!crops_dir.empty()) {
                const fundus::GrayImage green = fundus::green_plane(img);
                for (std::size_t k = 0; k < res.candidates.size(); ++k) {
                    const fundus::TileRect bb = res.candidates[k].bounding_box;
                    fundus::GrayImage crop(bb.w, bb.h);
                    for (int yy = 0; yy < bb.h; ++yy)
                        for (int xx = 0; xx < bb.w; ++xx)
                            crop.at(xx, yy) = green.at(bb.x + xx, bb.y + yy);
                    char name[64];
                    std::snprintf(name, sizeof(name), "row%04zu_cand%02zu.pgm", i, k);
                    fundus::save_pgm(fs::path(crops_dir) / name, crop);
                }
            }
        } catch (const std::exception& e) {
            outs[i].row = fundus::error_row(r.image, e.what());
            outs[i].error = true;
        }
    });

    ordered_json report = fundus::make_report("prefilter");
    for (auto& o : outs) {
        if (o.error)
            any_row_error = true;
        report["results"].push_back(std::move(o.row));
    }
    return report;
}

ordered_json do_evaluate(const fundus::DatasetManifest& man, const ordered_json* prescreen,
                         const ordered_json* prefilter) {
    std::map<std::string, const fundus::ManifestRow*> by_image;
    for (const auto& row : man.rows)
        by_image[row.image] = &row;
    auto lookup = [&by_image](const std::string& image) {
        const auto it = by_image.find(image);
        if (it == by_image.end())
            throw data_error("evaluate: report image not in manifest: " + image);
        return it->second;
    };

    ordered_json report;
    report["schema"] = fundus::kReportSchema;
    report["kind"] = "evaluate";

    if (prescreen != nullptr) {
        fundus::ConfusionCounts counts;
        for (const auto& r : (*prescreen)["results"]) {
            if (r.contains("error"))
                continue;
            const auto truth = lookup(r["image"].get<std::string>())->class_label();
            if (!truth)
                continue;
            const bool truth_abnormal = *truth == fundus::ClassLabel::Abnormal;
            const bool pred_abnormal = r["label"].get<std::string>() == "abnormal";
            if (truth_abnormal && pred_abnormal)
                ++counts.tp;
            else if (!truth_abnormal && pred_abnormal)
                ++counts.fp;
            else if (!truth_abnormal && !pred_abnormal)
                ++counts.tn;
            else
                ++counts.fn;
        }
        if (counts.total() == 0)
            throw data_error("evaluate: no phase-1 ground-truth labels for the report rows");
        const fundus::Metrics m = fundus::metrics(counts);
        report["phase1"] = fundus::metrics_json(counts, m);
        std::cout << "phase 1: accuracy " << m.accuracy;
        if (m.sensitivity)
            std::cout << ", sensitivity " << *m.sensitivity;
        if (m.specificity)
            std::cout << ", specificity " << *m.specificity;
        std::cout << " (tp " << counts.tp << " fp " << counts.fp << " tn " << counts.tn << " fn "
                  << counts.fn << ")\n";
    }

    if (prefilter != nullptr) {
        long size = 0, true_regions = 0, false_regions = 0, misclassified = 0, truth_rows = 0;
        std::vector<double> fractions;
        std::vector<long long> areas;
        for (const auto& r : (*prefilter)["results"]) {
            if (r.contains("error"))
                continue;
            ++size;
            const fundus::ManifestRow* row = lookup(r["image"].get<std::string>());
            std::optional<fundus::BinaryMask> mask;
            if (!row->lesions.empty()) {
                mask = fundus::load_mask_pgm(man.resolve(row->lesions));
                ++truth_rows;
            }
            fundus::PrefilterOutcome outcome;
            outcome.has_lesion_truth = mask && mask->count_true() > 0;
            for (const auto& c : r["candidates"]) {
                std::vector<std::pair<int, int>> pts;
                const auto& flat = c["pixels"];
                for (std::size_t j = 0; j + 1 < flat.size(); j += 2)
                    pts.emplace_back(flat[j].get<int>(), flat[j + 1].get<int>());
                outcome.found_any_candidate = true;
                if (mask && fundus::pixels_intersect_mask(pts, *mask)) {
                    ++true_regions;
                    outcome.found_any_candidate_on_lesion = true;
                } else {
                    ++false_regions;
                }
            }
            if (fundus::image_misclassified(outcome))
                ++misclassified;
            fractions.push_back(r["retained_fraction"].get<double>());
            areas.push_back(static_cast<long long>(r["width"].get<int>()) * r["height"].get<int>());
        }
        if (size == 0)
            throw data_error("evaluate: prefilter report has no usable rows");
        if (truth_rows == 0)
            throw data_error("evaluate: no phase-2 lesion ground truth for the report rows");
        const double mean_retained = fundus::pixel_reduction(fractions, areas);
        ordered_json phase2;
        phase2["size"] = size;
        phase2["true"] = true_regions;
        phase2["false"] = false_regions;
        phase2["misclassified"] = misclassified;
        phase2["percentage"] = 100.0 * mean_retained;
        report["phase2"] = std::move(phase2);
        std::cout << "phase 2: size " << size << ", true " << true_regions << ", false "
                  << false_regions << ", misclassified " << misclassified << ", percentage "
                  << 100.0 * mean_retained << "\n";
    }
    return report;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fundusgate: two-phase screening of fundus images"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a ground-truthed synthetic corpus");
    struct {
        std::string out;
        std::uint64_t seed = 1;
        int normal = 0, abnormal = 0, lesioned = 0;
        int width = 512, height = 512;
        std::string kind = "dark";
        int lesions_per_abnormal = 3, lesions_per_lesioned = 1;
    } sy;
    synth->add_option("--out", sy.out, "output directory")->required();
    synth->add_option("--seed", sy.seed, "corpus seed");
    synth->add_option("--normal", sy.normal, "number of Normal images");
    synth->add_option("--abnormal", sy.abnormal, "number of SeverelyAbnormal images");
    synth->add_option("--lesioned", sy.lesioned, "number of Lesioned images");
    synth->add_option("--width", sy.width, "image width");
    synth->add_option("--height", sy.height, "image height");
    synth->add_option("--lesion-kind", sy.kind, "dark|bright");
    synth->add_option("--lesions-per-abnormal", sy.lesions_per_abnormal,
                      "lesions planted per SeverelyAbnormal image");
    synth->add_option("--lesions-per-lesioned", sy.lesions_per_lesioned,
                      "lesions planted per Lesioned image");

    // train
    auto* train = app.add_subcommand("train", "train the pre-screening classifier");
    struct {
        std::string manifest, model;
        ConfigCli config;
    } tr;
    train->add_option("--manifest", tr.manifest, "training manifest")->required();
    train->add_option("--model", tr.model, "output model path")->required();
    add_config_options(train, tr.config);

    // prescreen
    auto* prescreen = app.add_subcommand("prescreen", "phase 1: classify images by severity");
    struct {
        std::string manifest, model, report;
        ConfigCli config;
    } ps;
    prescreen->add_option("--manifest", ps.manifest, "input manifest")->required();
    prescreen->add_option("--model", ps.model, "trained model")->required();
    prescreen->add_option("--report", ps.report, "output JSON report")->required();
    add_config_options(prescreen, ps.config);

    // prefilter
    auto* prefilter = app.add_subcommand("prefilter", "phase 2: extract lesion candidate regions");
    struct {
        std::string manifest, report, crops;
        ConfigCli config;
    } pf;
    prefilter->add_option("--manifest", pf.manifest, "input manifest")->required();
    prefilter->add_option("--report", pf.report, "output JSON report")->required();
    prefilter->add_option("--crops-dir", pf.crops, "write green-plane candidate crops here");
    add_config_options(prefilter, pf.config);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score reports against manifest ground truth");
    struct {
        std::string manifest, prescreen_report, prefilter_report, report;
    } ev;
    evaluate->add_option("--manifest", ev.manifest, "manifest with ground truth")->required();
    evaluate->add_option("--prescreen", ev.prescreen_report, "phase-1 report to score");
    evaluate->add_option("--prefilter", ev.prefilter_report, "phase-2 report to score");
    evaluate->add_option("--report", ev.report, "output JSON report");

    // pipeline
    auto* pipeline =
        app.add_subcommand("pipeline", "corpus -> train -> prescreen -> prefilter -> evaluate");
    struct {
        std::string out, manifest;
        std::uint64_t seed = 1;
        int normal = 10, abnormal = 10, lesioned = 10;
        int width = 512, height = 512;
        std::string kind = "dark";
        ConfigCli config;
    } pl;
    pipeline->add_option("--out", pl.out, "output directory")->required();
    pipeline->add_option("--manifest", pl.manifest,
                         "existing corpus manifest (otherwise one is synthesized)");
    pipeline->add_option("--seed", pl.seed, "corpus seed");
    pipeline->add_option("--normal", pl.normal, "synthesized Normal images");
    pipeline->add_option("--abnormal", pl.abnormal, "synthesized SeverelyAbnormal images");
    pipeline->add_option("--lesioned", pl.lesioned, "synthesized Lesioned images");
    pipeline->add_option("--width", pl.width, "synthesized image width");
    pipeline->add_option("--height", pl.height, "synthesized image height");
    pipeline->add_option("--lesion-kind", pl.kind, "dark|bright");
    add_config_options(pipeline, pl.config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (synth->parsed())
        return guarded([&]() -> int {
            fundus::CorpusOptions opt;
            opt.seed = sy.seed;
            opt.width = sy.width;
            opt.height = sy.height;
            opt.lesion_kind = fundus::parse_lesion_kind(sy.kind);
            opt.lesions_per_abnormal = sy.lesions_per_abnormal;
            opt.lesions_per_lesioned = sy.lesions_per_lesioned;
            fundus::CorpusCounts counts;
            counts.normal = sy.normal;
            counts.abnormal = sy.abnormal;
            counts.lesioned = sy.lesioned;
            const fs::path manifest = fundus::generate_corpus(opt, counts, sy.out);
            std::cout << manifest.string() << "\n";
            return 0;
        });

    if (train->parsed())
        return guarded([&]() -> int {
            const fundus::RunConfig cfg = resolve_config(tr.config);
            const fundus::DatasetManifest man = fundus::load_manifest(tr.manifest);
            const fundus::NaiveBayesModel model = do_train(man, cfg);
            fundus::write_file_text(tr.model, fundus::save_model(model));
            std::cout << "model written to " << tr.model << "\n";
            return 0;
        });

    if (prescreen->parsed())
        return guarded([&]() -> int {
            const fundus::RunConfig cfg = resolve_config(ps.config);
            const fundus::DatasetManifest man = fundus::load_manifest(ps.manifest);
            const fundus::NaiveBayesModel model =
                fundus::load_model(fundus::read_file_text(ps.model));
            bool any_error = false;
            const ordered_json report = do_prescreen(man, model, cfg, any_error);
            fundus::write_report(ps.report, report);
            std::cout << "prescreen report written to " << ps.report << " ("
                      << report["process_further"].size() << " of " << man.rows.size()
                      << " images pass to phase 2)\n";
            return any_error ? 3 : 0;
        });

    if (prefilter->parsed())
        return guarded([&]() -> int {
            const fundus::RunConfig cfg = resolve_config(pf.config);
            const fundus::DatasetManifest man = fundus::load_manifest(pf.manifest);
            bool any_error = false;
            const ordered_json report = do_prefilter(man, cfg, pf.crops, any_error);
            long candidates = 0;
            for (const auto& r : report["results"])
                if (r.contains("candidates"))
                    candidates += static_cast<long>(r["candidates"].size());
            fundus::write_report(pf.report, report);
            std::cout << "prefilter report written to " << pf.report << " (" << candidates
                      << " candidate regions over " << man.rows.size() << " images)\n";
            return any_error ? 3 : 0;
        });

    if (evaluate->parsed())
        return guarded([&]() -> int {
            if (ev.prescreen_report.empty() && ev.prefilter_report.empty())
                throw std::invalid_argument("evaluate: provide --prescreen and/or --prefilter");
            const fundus::DatasetManifest man = fundus::load_manifest(ev.manifest);
            std::optional<ordered_json> pre, post;
            if (!ev.prescreen_report.empty())
                pre = fundus::load_report(ev.prescreen_report);
            if (!ev.prefilter_report.empty())
                post = fundus::load_report(ev.prefilter_report);
            const ordered_json report =
                do_evaluate(man, pre ? &*pre : nullptr, post ? &*post : nullptr);
            if (!ev.report.empty()) {
                fundus::write_report(ev.report, report);
                std::cout << "evaluate report written to " << ev.report << "\n";
            }
            return 0;
        });

    if (pipeline->parsed())
        return guarded([&]() -> int {
            const fundus::RunConfig cfg = resolve_config(pl.config);
            fs::create_directories(pl.out);
            const fs::path out(pl.out);

            fundus::DatasetManifest man;
            if (!pl.manifest.empty()) {
                man = fundus::load_manifest(pl.manifest);
            } else {
                fundus::CorpusOptions opt;
                opt.seed = pl.seed;
                opt.width = pl.width;
                opt.height = pl.height;
                opt.lesion_kind = fundus::parse_lesion_kind(pl.kind);
                fundus::CorpusCounts counts;
                counts.normal = pl.normal;
                counts.abnormal = pl.abnormal;
                counts.lesioned = pl.lesioned;
                const fs::path manifest = fundus::generate_corpus(opt, counts, out / "corpus");
                man = fundus::load_manifest(manifest);
                std::cout << "corpus written to " << manifest.string() << "\n";
            }

            const fundus::NaiveBayesModel model = do_train(man, cfg);
            fundus::write_file_text(out / "model.nbm", fundus::save_model(model));

            bool err_prescreen = false;
            const ordered_json rep1 = do_prescreen(man, model, cfg, err_prescreen);
            fundus::write_report(out / "prescreen.json", rep1);

            // phase 2 runs only on images phase 1 passed through
            std::set<std::string> passed;
            for (const auto& image : rep1["process_further"])
                passed.insert(image.get<std::string>());
            fundus::DatasetManifest phase2 = man;
            phase2.rows.clear();
            for (const auto& row : man.rows)
                if (passed.count(row.image) != 0)
                    phase2.rows.push_back(row);

            bool err_prefilter = false;
            ordered_json rep2 = fundus::make_report("prefilter");
            if (!phase2.rows.empty())
                rep2 = do_prefilter(phase2, cfg, "", err_prefilter);
            fundus::write_report(out / "prefilter.json", rep2);

            const bool phase2_truth = [&] {
                for (const auto& row : phase2.rows)
                    if (!row.lesions.empty())
                        return true;
                return false;
            }();
            const ordered_json eval_report =
                do_evaluate(man, &rep1, phase2_truth ? &rep2 : nullptr);
            fundus::write_report(out / "evaluate.json", eval_report);
            if (!phase2_truth)
                std::cout << "phase 2 skipped in evaluation (no lesion ground truth passed phase 1)\n";

            std::cout << "pipeline outputs in " << out.string() << ": model.nbm, prescreen.json, "
                      << "prefilter.json, evaluate.json\n";
            return (err_prescreen || err_prefilter) ? 3 : 0;
        });

    return 2;
}
