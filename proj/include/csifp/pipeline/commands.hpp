#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "csifp/channel/csi.hpp"
#include "csifp/dataset/dataset_io.hpp"
#include "csifp/dataset/fingerprint_dataset.hpp"
#include "csifp/nn/checkpoint.hpp"
#include "csifp/nn/trainer.hpp"
#include "csifp/pipeline/artifacts.hpp"
#include "csifp/positioning/evaluation.hpp"

namespace csifp::pipeline {

enum class ExitCode : int { ok = 0, failure = 1, config = 2, data = 3, divergence = 4, verification = 5 };

inline ExitCode exit_code_for(const std::exception& e) {
    if (dynamic_cast<const VerificationError*>(&e)) return ExitCode::verification;
    if (dynamic_cast<const DivergenceError*>(&e)) return ExitCode::divergence;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const GeometryError*>(&e)) return ExitCode::config;
    if (dynamic_cast<const FileError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
        dynamic_cast<const NumericError*>(&e)) {
        return ExitCode::data;
    }
    return ExitCode::failure;
}

// ---- scene ----------------------------------------------------------------

inline SceneReport cmd_scene(const RunConfig& rc, std::ostream& log) {
    fs::create_directories(rc.paths.dir);
    const auto report = analyze_scene(rc.scene);
    write_text(rc.paths.scene(), scene_artifact_text(rc));
    write_text(rc.paths.scene_summary(),
               scene_summary_text(report, config_hash(rc, scene_sections()), rc.scene.rng_seed));
    log << "scene: " << report.n_reference << " reference points (" << report.nlos_reference << " NLOS), "
        << report.n_test << " test points (" << report.nlos_test << " NLOS), " << report.n_buildings
        << " buildings\n";
    for (const auto& p : report.points) {
        if (p.paths == 0) {
            log << "warning: " << (p.is_test ? "test" : "reference") << " point " << p.id
                << " receives no path; its CSI is pure noise\n";
        }
    }
    log << "wrote " << rc.paths.scene().string() << "\n";
    return report;
}

/// Refuses to build on a scene artifact produced from another [scene] block.
inline void check_scene_fresh(const RunConfig& rc) {
    require_artifact(rc.paths.scene(), "scene");
    if (read_text(rc.paths.scene()) != scene_artifact_text(rc)) {
        throw StaleArtifactError("'" + rc.paths.scene().string() +
                                 "' does not match the current [scene] configuration; rerun `csifp scene`");
    }
}

// ---- dataset --------------------------------------------------------------

struct SnrStats {
    bool is_test = false;
    std::uint32_t id = 0;
    double clean_db = 0.0;  ///< noiseless best-beam SNR
    double min_db = 0.0;    ///< over noisy samples, signal plus noise power
    double median_db = 0.0;
    double max_db = 0.0;
};

struct DatasetReport {
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::size_t n_test = 0;
    std::vector<std::size_t> train_per_class;
    std::vector<std::size_t> validation_per_class;
    double noise_power = 0.0;
    std::vector<SnrStats> snr;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline SnrStats snr_stats(const channel::Scene& scene, const channel::BeamCodebook& cb, double sigma2,
                          bool is_test, std::uint32_t id, channel::Point2 p, const std::vector<double>& noisy_db) {
    SnrStats s;
    s.is_test = is_test;
    s.id = id;
    s.clean_db = channel::best_beam_snr(channel::beamformed_csi(scene, channel::trace_paths(scene, p), cb), sigma2);
    if (!noisy_db.empty()) {
        s.min_db = *std::min_element(noisy_db.begin(), noisy_db.end());
        s.max_db = *std::max_element(noisy_db.begin(), noisy_db.end());
        s.median_db = median_of(noisy_db);
    }
    return s;
}

inline std::string dataset_report_text(const DatasetReport& r, const dataset::Provenance& prov) {
    std::ostringstream o;
    o << "config_hash = " << to_hex(prov.config_hash) << "\n"
      << "scene_sha256 = " << to_hex(prov.scene_hash) << "\n"
      << "seed = " << prov.seed << "\n"
      << "noise_power = " << exact(r.noise_power) << "\n"
      << "train = " << r.n_train << "\nvalidation = " << r.n_validation << "\ntest = " << r.n_test << "\n\n"
      << "class,train,validation\n";
    for (std::size_t c = 0; c < r.train_per_class.size(); ++c) {
        o << c << "," << r.train_per_class[c] << "," << r.validation_per_class[c] << "\n";
    }
    o << "\nkind,id,clean_snr_db,min_snr_db,median_snr_db,max_snr_db\n";
    for (const auto& s : r.snr) {
        o << (s.is_test ? "test" : "reference") << "," << s.id << "," << fixed(s.clean_db, 3) << ","
          << fixed(s.min_db, 3) << "," << fixed(s.median_db, 3) << "," << fixed(s.max_db, 3) << "\n";
    }
    return o.str();
}

} // namespace detail

inline DatasetReport cmd_dataset(const RunConfig& rc, std::ostream& log) {
    check_scene_fresh(rc);
    const auto& scene = rc.scene;
    const auto& d = rc.dataset;
    const auto cb = channel::build_codebook(scene.array, scene.n_az_beams, scene.n_el_beams);
    const auto budget = channel::calibrate_noise(scene, cb, d.probe_distance, d.target_snr_db);

    auto refs = dataset::generate_reference_set(scene, d.samples_per_point, budget, d.seed);
    auto test = dataset::generate_test_set(scene, d.test_samples_per_point, budget, d.seed);

    DatasetReport report;
    report.noise_power = budget.noise_power;
    {
        std::map<std::uint32_t, std::vector<double>> ref_db, test_db;
        for (const auto& s : refs) {
            ref_db[s.class_id].push_back(channel::best_beam_snr(dataset::from_real_tensor(s.tensor), budget.noise_power));
        }
        for (const auto& t : test) {
            test_db[t.test_point_id].push_back(
                channel::best_beam_snr(dataset::from_real_tensor(t.tensor), budget.noise_power));
        }
        for (std::uint32_t i = 0; i < scene.reference_points.size(); ++i) {
            report.snr.push_back(detail::snr_stats(scene, cb, budget.noise_power, false, i, scene.reference_points[i],
                                                   ref_db[i]));
        }
        for (std::uint32_t i = 0; i < scene.test_points.size(); ++i) {
            report.snr.push_back(
                detail::snr_stats(scene, cb, budget.noise_power, true, i, scene.test_points[i], test_db[i]));
        }
    }

    dataset::FingerprintDataset ds;
    ds.n_subcarriers = static_cast<std::uint32_t>(scene.n_subcarriers);
    ds.n_beams = static_cast<std::uint32_t>(scene.beam_count());
    std::tie(ds.train, ds.validation) = dataset::split(std::move(refs), d.train_fraction, d.seed);
    ds.test = std::move(test);
    ds.reference_map = dataset::make_reference_map(scene);
    ds.provenance = {sha256_file(rc.paths.scene().string()), config_hash(rc, dataset_sections()), d.seed};

    report.n_train = ds.train.size();
    report.n_validation = ds.validation.size();
    report.n_test = ds.test.size();
    report.train_per_class.assign(ds.reference_map.size(), 0);
    report.validation_per_class.assign(ds.reference_map.size(), 0);
    for (const auto& s : ds.train) ++report.train_per_class[s.class_id];
    for (const auto& s : ds.validation) ++report.validation_per_class[s.class_id];

    dataset::save_dataset(ds, rc.paths.dataset().string());
    write_text(rc.paths.dataset_report(), detail::dataset_report_text(report, ds.provenance));

    log << "dataset: " << report.n_train + report.n_validation << " reference samples (" << report.n_train
        << " train / " << report.n_validation << " validation), " << report.n_test << " test samples\n"
        << "noise power " << exact(budget.noise_power) << " for " << fixed(d.target_snr_db, 2)
        << " dB best-beam SNR at " << fixed(d.probe_distance, 1) << " m\n";
    const auto [lo, hi] = std::minmax_element(report.train_per_class.begin(), report.train_per_class.end());
    log << "class balance: " << *lo << ".." << *hi << " training samples per class\n";
    for (const auto& s : report.snr) {
        log << "  " << (s.is_test ? "test " : "ref  ") << s.id << ": clean " << fixed(s.clean_db, 1)
            << " dB, noisy median " << fixed(s.median_db, 1) << " dB [" << fixed(s.min_db, 1) << ", "
            << fixed(s.max_db, 1) << "]\n";
    }
    log << "wrote " << rc.paths.dataset().string() << "\n";
    return report;
}

/// Loads the dataset after checking it was built from the current scene
/// artifact and [scene]/[dataset] configuration.
inline dataset::FingerprintDataset load_fresh_dataset(const RunConfig& rc) {
    check_scene_fresh(rc);
    require_artifact(rc.paths.dataset(), "dataset");
    auto ds = dataset::load_dataset(rc.paths.dataset().string());
    if (ds.provenance.config_hash != config_hash(rc, dataset_sections()) ||
        ds.provenance.scene_hash != sha256_file(rc.paths.scene().string()) || ds.provenance.seed != rc.dataset.seed) {
        throw StaleArtifactError("'" + rc.paths.dataset().string() +
                                 "' was built from a different scene or [dataset] configuration; rerun `csifp dataset`");
    }
    if (ds.n_subcarriers != static_cast<std::uint32_t>(rc.network.in_height) ||
        2 * ds.n_beams != static_cast<std::uint32_t>(rc.network.in_width) ||
        ds.reference_map.size() != static_cast<std::size_t>(rc.network.n_classes)) {
        throw ShapeError("dataset shape does not match the configured network");
    }
    return ds;
}

// ---- train ----------------------------------------------------------------

struct TrainReport {
    std::vector<nn::EpochMetrics> history;
    std::vector<EpochError> test_error_by_epoch;
    double initial_loss = 0.0;
    int best_epoch = -1;
    double best_val_acc = 0.0;
};

namespace detail {

inline std::string train_summary_text(const RunConfig& rc, const Digest& dataset_hash, const TrainReport& r) {
    std::ostringstream o;
    o << "config_hash = " << to_hex(config_hash(rc, train_sections())) << "\n"
      << "dataset_sha256 = " << to_hex(dataset_hash) << "\n"
      << "dataset_seed = " << rc.dataset.seed << "\n"
      << "init_seed = " << rc.network.init_seed << "\n"
      << "shuffle_seed = " << rc.train.shuffle_seed << "\n"
      << "learning_rate = " << exact(rc.train.learning_rate) << "\n"
      << "reference_learning_rate = " << exact(nn::kReferenceLearningRate) << "\n"
      << "weight_decay = " << exact(rc.train.weight_decay) << "\n"
      << "batch_size = " << rc.train.batch_size << "\n"
      << "epochs = " << r.history.size() << "\n"
      << "initial_loss = " << exact(r.initial_loss) << "\n"
      << "uniform_loss = " << exact(std::log(static_cast<double>(rc.network.n_classes))) << "\n"
      << "best_epoch = " << r.best_epoch << "\n"
      << "max_val_acc = " << exact(r.best_val_acc) << "\n";
    if (!r.history.empty()) {
        const auto& last = r.history.back();
        o << "final_train_loss = " << exact(last.train_loss) << "\n"
          << "final_train_acc = " << exact(last.train_acc) << "\n"
          << "final_val_loss = " << exact(last.val_loss) << "\n"
          << "final_val_acc = " << exact(last.val_acc) << "\n";
    }
    if (!r.test_error_by_epoch.empty()) {
        std::vector<double> means;
        for (const auto& e : r.test_error_by_epoch) means.push_back(e.mean_error_m);
        const auto best = positioning::track_min_mean_error(means);
        o << "min_mean_test_error_m = " << exact(best.mean_error_m) << "\n"
          << "min_mean_test_error_epoch = " << r.test_error_by_epoch[static_cast<std::size_t>(best.epoch)].epoch
          << "\n";
    }
    return o.str();
}

} // namespace detail

inline TrainReport cmd_train(const RunConfig& rc, bool resume, std::ostream& log) {
    const auto ds = load_fresh_dataset(rc);
    const auto dataset_hash = sha256_file(rc.paths.dataset().string());

    nn::TrainOptions options;
    options.dataset_hash = dataset_hash;
    options.config_hash = config_hash(rc, train_sections());

    std::optional<nn::Checkpoint> last, best;
    TrainReport report;
    if (resume) {
        require_artifact(rc.paths.last_checkpoint(), "train");
        last = nn::load_checkpoint(rc.paths.last_checkpoint().string());
        if (last->dataset_hash != dataset_hash) {
            throw StaleArtifactError("'" + rc.paths.last_checkpoint().string() +
                                     "' was trained on a different dataset; cannot resume");
        }
        if (last->best_epoch >= 0) {
            require_artifact(rc.paths.best_checkpoint(), "train");
            best = nn::load_checkpoint(rc.paths.best_checkpoint().string());
            options.resume_best = &*best;
        }
        options.resume = &*last;
        for (const auto& row : read_epoch_error_csv(rc.paths.test_error_by_epoch())) {
            if (row.epoch < static_cast<int>(last->epochs_completed)) {
                report.test_error_by_epoch.push_back(row);
            }
        }
        log << "resuming after epoch " << last->epochs_completed << "\n";
    }

    const bool track = rc.track_test_error && !ds.test.empty();
    options.observer = [&](const nn::EpochMetrics& m, const nn::Network& net) {
        log << "epoch " << m.epoch << ": train loss " << fixed(m.train_loss, 5) << " acc " << fixed(m.train_acc, 4)
            << " | val loss " << fixed(m.val_loss, 5) << " acc " << fixed(m.val_acc, 4);
        if (track) {
            const auto e = positioning::evaluate(net, ds.test, ds.reference_map, rc.eval.top_r);
            report.test_error_by_epoch.push_back({m.epoch, e.overall_mean_m});
            log << " | test mean error " << fixed(e.overall_mean_m, 3) << " m";
        }
        log << std::endl;
    };

    log << "training " << rc.train.epochs << " epochs, batch " << rc.train.batch_size << ", learning rate "
        << compact(rc.train.learning_rate) << " (reference " << compact(nn::kReferenceLearningRate)
        << "), weight decay " << compact(rc.train.weight_decay) << "\n";
    nn::TrainResult result;
    try {
        result = nn::train(ds.train, ds.validation, rc.network, rc.train, options);
    } catch (const nn::TrainingDiverged& e) {
        nn::save_checkpoint(e.state(), rc.paths.diverged_checkpoint().string());
        write_text(rc.paths.metrics(), metrics_csv(e.state().history));
        log << "diverged: " << e.what() << "\nstate dumped to " << rc.paths.diverged_checkpoint().string()
            << " after " << e.state().epochs_completed << " completed epochs\n";
        throw;
    }

    report.history = result.history;
    report.initial_loss = resume ? 0.0 : result.initial_loss;
    report.best_epoch = result.best.best_epoch;
    report.best_val_acc = result.best.best_val_acc;
    if (!resume) {
        log << "initial loss " << fixed(result.initial_loss, 4) << " (ln N = "
            << fixed(std::log(static_cast<double>(rc.network.n_classes)), 4) << ")\n";
    }

    nn::save_checkpoint(result.best, rc.paths.best_checkpoint().string());
    nn::save_checkpoint(result.last, rc.paths.last_checkpoint().string());
    write_text(rc.paths.metrics(), metrics_csv(result.history));
    if (track) {
        write_text(rc.paths.test_error_by_epoch(), epoch_error_csv(report.test_error_by_epoch));
    }
    auto summary = detail::train_summary_text(rc, dataset_hash, report);
    if (resume) {
        // the pre-training loss belongs to the original run
        summary += "resumed_after_epoch = " + std::to_string(last->epochs_completed) + "\n";
        const auto previous = fs::exists(rc.paths.train_summary()) ? read_text(rc.paths.train_summary()) : "";
        const auto init = report_value(previous, "initial_loss");
        if (!init.empty()) {
            const auto at = summary.find("initial_loss = ");
            const auto eol = summary.find('\n', at);
            summary.replace(at, eol - at, "initial_loss = " + init);
        }
    }
    write_text(rc.paths.train_summary(), summary);
    log << "max validation accuracy " << fixed(100.0 * report.best_val_acc, 2) << "% at epoch " << report.best_epoch
        << "\nwrote " << rc.paths.best_checkpoint().string() << ", " << rc.paths.metrics().string() << "\n";
    return report;
}

// ---- eval -----------------------------------------------------------------

struct EvalReport {
    positioning::ErrorReport errors;
    std::vector<std::pair<std::size_t, double>> sweep;  ///< (R, overall mean error)
    std::optional<positioning::MinMeanError> min_mean;  ///< over training epochs, if tracked
};

namespace detail {

inline std::vector<std::vector<double>> test_probabilities(const nn::Network& net,
                                                           std::span<const dataset::TestRecord> test) {
    std::vector<std::vector<double>> out;
    out.reserve(test.size());
    for (const auto& rec : test) {
        const auto logits = net.predict(nn::make_single(rec.tensor));
        out.push_back(nn::softmax(logits.row(0)));
    }
    return out;
}

inline std::string errors_csv(const positioning::ErrorReport& r) {
    std::string out = "test_point_id,sample_idx,error_m\n";
    for (const auto& s : r.samples) {
        out += std::to_string(s.test_point_id) + "," + std::to_string(s.sample_index) + "," + exact(s.error_m) + "\n";
    }
    return out;
}

} // namespace detail

inline EvalReport cmd_eval(const RunConfig& rc, bool sweep, std::ostream& log) {
    const auto ds = load_fresh_dataset(rc);
    const auto ckpt_path = rc.eval.use_best ? rc.paths.best_checkpoint() : rc.paths.last_checkpoint();
    require_artifact(ckpt_path, "train");
    const auto ckpt = nn::load_checkpoint(ckpt_path.string());
    const auto dataset_hash = sha256_file(rc.paths.dataset().string());
    if (ckpt.dataset_hash != dataset_hash || ckpt.config_hash != config_hash(rc, train_sections())) {
        throw StaleArtifactError("'" + ckpt_path.string() +
                                 "' was trained on another dataset or configuration; rerun `csifp train`");
    }
    if (ds.test.empty()) {
        throw ConfigError("the scene has no test points to evaluate");
    }

    EvalReport out;
    out.errors = positioning::evaluate(ckpt, ds.test, ds.reference_map, rc.eval.top_r);
    const auto epoch_errors = read_epoch_error_csv(rc.paths.test_error_by_epoch());
    if (!epoch_errors.empty()) {
        std::vector<double> means;
        for (const auto& e : epoch_errors) means.push_back(e.mean_error_m);
        auto m = positioning::track_min_mean_error(means);
        m.epoch = epoch_errors[static_cast<std::size_t>(m.epoch)].epoch;
        out.min_mean = m;
    }

    const auto scene_report = analyze_scene(rc.scene);
    std::ostringstream s;
    s << "top_r = " << rc.eval.top_r << "\n"
      << "checkpoint = " << ckpt_path.filename().string() << "\n"
      << "checkpoint_epoch = " << static_cast<int>(ckpt.epochs_completed) - 1 << "\n"
      << "checkpoint_sha256 = " << to_hex(sha256_file(ckpt_path.string())) << "\n"
      << "dataset_sha256 = " << to_hex(dataset_hash) << "\n"
      << "config_hash = " << to_hex(config_hash(rc, eval_sections())) << "\n"
      << "dataset_seed = " << rc.dataset.seed << "\n"
      << "init_seed = " << rc.network.init_seed << "\n"
      << "shuffle_seed = " << rc.train.shuffle_seed << "\n\n";
    for (const auto& p : out.errors.points) {
        std::vector<double> errs;
        for (const auto& e : out.errors.samples) {
            if (e.test_point_id == p.test_point_id) errs.push_back(e.error_m);
        }
        bool los = true;
        for (const auto& st : scene_report.points) {
            if (st.is_test && st.id == p.test_point_id) los = st.los;
        }
        s << "[test point " << p.test_point_id << "]\n"
          << "position = " << exact(p.truth.x) << " " << exact(p.truth.y) << "\n"
          << "condition = " << (los ? "LOS" : "NLOS") << "\n"
          << "samples = " << p.samples << "\n"
          << "mean_error_m = " << fixed(p.mean_error_m, 4) << "\n"
          << "median_error_m = " << fixed(detail::median_of(errs), 4) << "\n"
          << "max_error_m = " << fixed(*std::max_element(errs.begin(), errs.end()), 4) << "\n\n";
    }
    s << "overall_mean_error_m = " << fixed(out.errors.overall_mean_m, 4) << "\n";
    if (out.min_mean) {
        s << "min_mean_error_m = " << fixed(out.min_mean->mean_error_m, 4) << "\n"
          << "min_mean_error_epoch = " << out.min_mean->epoch << "\n";
    }
    write_text(rc.paths.summary(), s.str());
    write_text(rc.paths.errors(), detail::errors_csv(out.errors));
    write_text(rc.paths.timing(), "median_latency_s = " + exact(out.errors.median_latency_s) + "\n");

    if (sweep) {
        const auto net = nn::network_from(ckpt);
        const auto probs = detail::test_probabilities(net, ds.test);
        std::string csv = "top_r,overall_mean_error_m\n";
        const std::size_t max_r = std::min(rc.eval.sweep_max_r, ds.reference_map.size());
        for (std::size_t r = 1; r <= max_r; ++r) {
            double total = 0.0;
            for (std::size_t i = 0; i < ds.test.size(); ++i) {
                const auto est = positioning::predict_position(probs[i], ds.reference_map, r);
                total += positioning::euclidean_error(est, ds.test[i].true_position);
            }
            const double mean = total / static_cast<double>(ds.test.size());
            out.sweep.emplace_back(r, mean);
            csv += std::to_string(r) + "," + exact(mean) + "\n";
        }
        write_text(rc.paths.sweep(), csv);
    }

    log << "evaluated " << out.errors.samples.size() << " test samples with R = " << rc.eval.top_r << " using "
        << ckpt_path.filename().string() << "\n";
    for (const auto& p : out.errors.points) {
        log << "  test point " << p.test_point_id << ": mean error " << fixed(p.mean_error_m, 3) << " m\n";
    }
    log << "overall mean error " << fixed(out.errors.overall_mean_m, 3) << " m\n";
    if (out.min_mean) {
        log << "minimum mean error over epochs " << fixed(out.min_mean->mean_error_m, 3) << " m at epoch "
            << out.min_mean->epoch << "\n";
    }
    log << "median latency " << fixed(1e3 * out.errors.median_latency_s, 3) << " ms per sample\n";
    for (const auto& [r, e] : out.sweep) {
        log << "  R = " << r << ": " << fixed(e, 3) << " m\n";
    }
    return out;
}

// ---- verify ---------------------------------------------------------------

struct VerifyReport {
    std::vector<std::string> checked;
    std::vector<std::string> problems;
    bool ok() const noexcept { return problems.empty(); }
};

/// Recomputes the provenance chain scene -> dataset -> checkpoints -> report
/// against the current configuration. Absent downstream artifacts are
/// skipped; a present artifact whose parent is absent is a failure.
inline VerifyReport verify_artifacts(const RunConfig& rc) {
    VerifyReport v;
    auto fail = [&](const std::string& what) { v.problems.push_back(what); };
    auto pass = [&](const std::string& what) { v.checked.push_back(what); };
    const auto& p = rc.paths;

    const bool have_scene = fs::exists(p.scene());
    if (!have_scene) {
        fail("scene artifact " + p.scene().string() + " is missing");
        return v;
    }
    if (read_text(p.scene()) != scene_artifact_text(rc)) {
        fail("scene.txt does not match the current [scene] configuration");
    } else {
        pass("scene.txt matches [scene] (config hash " + to_hex(config_hash(rc, scene_sections())).substr(0, 16) + ")");
    }

    if (!fs::exists(p.dataset())) {
        return v;
    }
    const auto dataset_hash = sha256_file(p.dataset().string());
    try {
        const auto ds = dataset::load_dataset(p.dataset().string());
        const bool scene_ok = ds.provenance.scene_hash == sha256_file(p.scene().string());
        const bool cfg_ok = ds.provenance.config_hash == config_hash(rc, dataset_sections());
        const bool seed_ok = ds.provenance.seed == rc.dataset.seed;
        if (!scene_ok) fail("dataset.bin records a different scene artifact hash");
        if (!cfg_ok) fail("dataset.bin records a different [scene]/[dataset] config hash");
        if (!seed_ok) fail("dataset.bin records seed " + std::to_string(ds.provenance.seed));
        if (scene_ok && cfg_ok && seed_ok) pass("dataset.bin checksums, scene hash, config hash and seed");
    } catch (const FileError& e) {
        fail(std::string("dataset.bin is unreadable: ") + e.what());
    }

    std::optional<Digest> best_hash;
    for (const auto& ckpt_path : {p.best_checkpoint(), p.last_checkpoint()}) {
        if (!fs::exists(ckpt_path)) {
            continue;
        }
        const auto name = ckpt_path.filename().string();
        try {
            const auto c = nn::load_checkpoint(ckpt_path.string());
            bool ok = true;
            if (c.dataset_hash != dataset_hash) fail(name + " was trained on a different dataset.bin"), ok = false;
            if (c.config_hash != config_hash(rc, train_sections())) fail(name + " records a different config hash"), ok = false;
            if (!(c.network_config == rc.network)) fail(name + " network configuration differs from [network]"), ok = false;
            if (!(c.train_config == rc.train)) fail(name + " training configuration differs from [train]"), ok = false;
            if (ckpt_path == p.last_checkpoint() && fs::exists(p.metrics()) && read_text(p.metrics()) != metrics_csv(c.history)) {
                fail("metrics.csv does not match the history stored in last.ckpt"), ok = false;
            }
            if (ok) pass(name + " checksums, dataset hash and config hash");
        } catch (const FileError& e) {
            fail(name + " is unreadable: " + e.what());
        }
    }
    if (fs::exists(p.summary())) {
        const auto text = read_text(p.summary());
        const auto ckpt_name = report_value(text, "checkpoint");
        const auto ckpt_path = p.dir / ckpt_name;
        bool ok = true;
        if (ckpt_name.empty() || !fs::exists(ckpt_path)) {
            fail("summary.txt refers to a missing checkpoint '" + ckpt_name + "'"), ok = false;
        } else if (report_value(text, "checkpoint_sha256") != to_hex(sha256_file(ckpt_path.string()))) {
            fail("summary.txt was produced from a different " + ckpt_name), ok = false;
        }
        if (report_value(text, "dataset_sha256") != to_hex(dataset_hash)) fail("summary.txt was produced from a different dataset.bin"), ok = false;
        if (report_value(text, "config_hash") != to_hex(config_hash(rc, eval_sections()))) fail("summary.txt records a different config hash"), ok = false;
        if (ok) pass("summary.txt checkpoint, dataset and config hashes");
    }
    return v;
}

inline VerifyReport cmd_verify(const RunConfig& rc, std::ostream& log) {
    auto v = verify_artifacts(rc);
    for (const auto& c : v.checked) log << "ok    " << c << "\n";
    for (const auto& c : v.problems) log << "FAIL  " << c << "\n";
    if (!v.ok()) {
        throw VerificationError(std::to_string(v.problems.size()) + " provenance check(s) failed");
    }
    log << "provenance chain verified\n";
    return v;
}

/// scene -> dataset -> train -> eval in one go.
inline EvalReport run_all(const RunConfig& rc, bool sweep, std::ostream& log) {
    cmd_scene(rc, log);
    cmd_dataset(rc, log);
    cmd_train(rc, false, log);
    return cmd_eval(rc, sweep, log);
}

} // namespace csifp::pipeline
