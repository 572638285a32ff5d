// raln: command-line front end. Every subcommand writes its table or result
// atomically, plus <out>.manifest.json describing the run.

#include "cli_support.hpp"

#include "raln/alignment.hpp"
#include "raln/error.hpp"
#include "raln/experiments.hpp"
#include "raln/filter_probe.hpp"
#include "raln/joint.hpp"
#include "raln/noise.hpp"
#include "raln/parallel.hpp"
#include "raln/training.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstring>
#include <iostream>

using namespace raln;
using namespace raln::cli;

namespace {

// Mathematical failures discovered after the outputs were written.
struct Outcome {
    int exit_code = 0;
};

struct TargetOptions {
    std::string labels_from;
    std::string targets = "labels";
};

void add_data_options(CLI::App* cmd, DataSource& src) {
    cmd->add_option("--data", src.path, "Dataset container, or a .csv file")->required();
    cmd->add_option("--label-column", src.label_column, "CSV label column (negative counts from the end)");
    cmd->add_flag("--csv-header", src.has_header, "CSV input starts with a header row");
}

void add_target_options(CLI::App* cmd, TargetOptions& t) {
    cmd->add_option("--labels-from", t.labels_from, "Take class labels from this dataset instead (same N)");
    cmd->add_option("--targets", t.targets, "Supervised targets: one-hot labels or the inputs themselves")
        ->check(CLI::IsMember({"labels", "inputs"}));
}

void record_data(Manifest& m, const DataSource& src) {
    m.add_input(src.path);
    m.config()["data"] = src.path.string();
    if (src.label_column) m.config()["label_column"] = *src.label_column;
    if (src.has_header) m.config()["csv_header"] = true;
}

Matrix targets_for(const Dataset& ds, const TargetOptions& t, Manifest& m, const DataSource& src) {
    m.config()["targets"] = t.targets;
    if (t.targets == "inputs") return ds.x.values();
    if (t.labels_from.empty()) return one_hot(ds.labels, ds.num_classes);
    DataSource other{t.labels_from, src.label_column, src.has_header};
    const Dataset labels = load_dataset(other);
    m.add_input(other.path);
    m.config()["labels_from"] = t.labels_from;
    if (labels.x.cols() != ds.x.cols())
        throw Error(Errc::ShapeMismatch, "--labels-from has " + std::to_string(labels.x.cols()) +
                                             " samples, data has " + std::to_string(ds.x.cols()));
    return one_hot(labels.labels, labels.num_classes);
}

void require_k_within_rank(const Dataset& ds, Index k) {
    if (k < 1) throw Error(Errc::InvalidArgument, "--k must be positive");
    if (k > ds.x.rank())
        throw Error(Errc::KExceedsRank,
                    "K = " + std::to_string(k) + " exceeds rank(X) = " + std::to_string(ds.x.rank()));
}

// ---------------------------------------------------------------- align-sweep

struct AlignArgs {
    DataSource src;
    TargetOptions targets;
    bool center = false;
    std::string variant = "gram";
    fs::path out;
    bool plot = false;
};

Outcome run_align_sweep(const AlignArgs& a) {
    Manifest m("align-sweep");
    const Dataset ds = load_dataset(a.src);
    record_data(m, a.src);
    const Matrix y = targets_for(ds, a.targets, m, a.src);
    m.config()["center"] = a.center;
    m.config()["variant"] = a.variant;

    const AlignmentOptions opt{a.variant == "gram" ? AlignmentVariant::Gram : AlignmentVariant::Proof, a.center};
    const AlignmentCurve curve = alignment_sweep(ds.x, y, opt);

    const auto d = static_cast<double>(ds.x.rows());
    CsvTable table("align-sweep", {"k", "k_over_D", "alignment"});
    PlotSeries series{a.variant, {}, {}};
    for (Index i = 0; i < curve.values.size(); ++i) {
        table.add_row({fmt(static_cast<long long>(i + 1)), fmt((i + 1) / d), fmt(curve.values(i))});
        series.x.push_back((i + 1) / d);
        series.y.push_back(curve.values(i));
    }
    m.write_output(a.out, table.str());
    if (a.plot)
        m.write_output(sibling(a.out, ".svg"),
                       render_svg({series}, {"Task alignment", "k / D", "alignment", false, false}));
    m.finish(a.out);
    return {};
}

// ---------------------------------------------------------------------- solve

struct SolveArgs {
    DataSource src;
    TargetOptions targets;
    double lambda = 1.0;
    Index k = 1;
    fs::path out;
};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

// "RALM", u32 version 1, u32 count, then per matrix u32 rows, u32 cols and
// rows·cols little-endian float64 values, column-major.
std::string encode_matrices(const std::vector<const Matrix*>& mats) {
    std::string out = "RALM";
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(mats.size()));
    for (const Matrix* mat : mats) {
        put_u32(out, static_cast<std::uint32_t>(mat->rows()));
        put_u32(out, static_cast<std::uint32_t>(mat->cols()));
        for (Index j = 0; j < mat->cols(); ++j)
            for (Index i = 0; i < mat->rows(); ++i) put_f64(out, (*mat)(i, j));
    }
    return out;
}

Outcome run_solve(const SolveArgs& a) {
    Manifest m("solve");
    const Dataset ds = load_dataset(a.src);
    record_data(m, a.src);
    const Matrix y = targets_for(ds, a.targets, m, a.src);
    m.config()["lambda"] = a.lambda;
    m.config()["k"] = a.k;
    require_k_within_rank(ds, a.k);

    const JointSolution sol = solve_joint({ds.x, y, a.lambda, a.k});
    const fs::path bin = sibling(a.out, ".bin");

    Json j;
    j["lambda"] = sol.lambda;
    j["k"] = sol.k;
    j["d"] = ds.x.rows();
    j["n"] = ds.x.cols();
    j["c"] = y.rows();
    j["loss"] = sol.loss_value;
    j["decoder_defined"] = sol.decoder_defined;
    j["spectrum"] = std::vector<double>(sol.spectrum.data(), sol.spectrum.data() + sol.spectrum.size());
    j["matrices"] = {{"file", bin.filename().string()}, {"order", {"V", "W", "Z"}}};

    m.write_output(bin, encode_matrices({&sol.v, &sol.w, &sol.z}));
    m.write_output(a.out, j.dump(2) + "\n");
    m.finish(a.out);
    return {};
}

// ------------------------------------------------------------------- validate

struct ValidateArgs {
    DataSource src;
    TargetOptions targets;
    std::string lambda_grid = "0,0.1,1,10";
    Index k = 1;
    Index steps = 15000;
    std::uint64_t seed = 0;
    std::optional<double> step_size;
    Index record_every = 1;
    fs::path out;
    bool plot = false;
};

Outcome run_validate(const ValidateArgs& a) {
    Manifest m("validate");
    const Dataset ds = load_dataset(a.src);
    record_data(m, a.src);
    const Matrix y = targets_for(ds, a.targets, m, a.src);
    const std::vector<double> lambdas = parse_doubles(a.lambda_grid);
    require_k_within_rank(ds, a.k);
    if (a.steps < 1 || a.record_every < 1) throw Error(Errc::InvalidArgument, "--steps and --record-every must be positive");

    OptimizerConfig config = default_validation_config(a.seed);
    config.steps = a.steps;
    if (a.step_size) config.step_size = *a.step_size;
    m.config()["lambda_grid"] = lambdas;
    m.config()["k"] = a.k;
    m.config()["steps"] = a.steps;
    m.config()["record_every"] = a.record_every;
    m.config()["optimizer"] = {{"kind", describe(config.kind)},
                               {"step_size", config.step_size},
                               {"init_scale", config.init_scale},
                               {"final_step_fraction", config.final_step_fraction}};
    m.add_seed(a.seed);

    std::vector<GdValidation> runs(lambdas.size());
    parallel_for(lambdas.size(), [&](std::size_t i) {
        runs[i] = gd_validate_closed_form({ds.x, y, lambdas[i], a.k}, config, a.record_every);
    });

    CsvTable table("validate", {"lambda", "step", "loss", "gap"});
    Json summary = Json::array();
    std::vector<PlotSeries> plots;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const GdValidation& r = runs[i];
        PlotSeries s{"lambda=" + fmt(lambdas[i]), {}, {}};
        for (const GapPoint& p : r.curve) {
            table.add_row({fmt(lambdas[i]), fmt(static_cast<long long>(p.step)), fmt(p.loss), fmt(p.gap)});
            s.x.push_back(static_cast<double>(p.step));
            s.y.push_back(std::abs(p.gap));
        }
        plots.push_back(std::move(s));
        const double scale = 1.0 + std::abs(r.optimal);
        const bool ok = r.min_gap >= -1e-6 * scale && r.min_gap <= 1e-3 * scale;
        summary.push_back({{"lambda", lambdas[i]},
                           {"optimal", r.optimal},
                           {"min_gap", r.min_gap},
                           {"final_gap", r.final_gap},
                           {"within_contract", ok}});
        std::cout << "lambda=" << fmt(lambdas[i]) << " optimal=" << fmt(r.optimal) << " min_gap=" << fmt(r.min_gap)
                  << (ok ? " ok" : " OUTSIDE CONTRACT") << '\n';
    }
    m.write_output(a.out, table.str());
    m.write_output(sibling(a.out, ".json"), Json{{"runs", summary}}.dump(2) + "\n");
    if (a.plot)
        m.write_output(sibling(a.out, ".svg"),
                       render_svg(plots, {"Gap to the closed-form optimum", "step", "|loss - optimum|", true, false}));
    m.finish(a.out);
    return {};
}

// ------------------------------------------------------------------------ dae

struct DaeArgs {
    DataSource src;
    TargetOptions targets;
    std::string noise;
    std::string k_list = "1";
    std::string p_grid;
    double mc_check = 0;
    std::uint64_t seed = 0;
    fs::path out;
    bool plot = false;
};

struct MomentCheck {
    double max_z = 0.0;
    double within = 1.0;  // share of entries within 3 standard errors
};

MomentCheck check_moments(const NoiseModel& model, const Matrix& x, Index n, std::uint64_t seed) {
    const NoiseMoments exact = closed_form_moments(model, x);
    const NoiseMoments mc = mc_moments(model, x, n, seed);
    MomentCheck out;
    Index total = 0, good = 0;
    auto scan = [&](const Matrix& e, const Matrix& s, const Matrix& se) {
        const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
        for (Index j = 0; j < e.cols(); ++j)
            for (Index i = 0; i < e.rows(); ++i) {
                const double diff = std::abs(e(i, j) - s(i, j));
                double z = 0.0;
                if (se(i, j) > 0) z = diff / se(i, j);
                else if (diff > 1e-12 * scale) z = INFINITY;
                out.max_z = std::max(out.max_z, z);
                ++total;
                if (z <= 3.0) ++good;
            }
    };
    scan(exact.s, mc.s, mc.monte_carlo->s_stderr);
    scan(exact.g, mc.g, mc.monte_carlo->g_stderr);
    out.within = static_cast<double>(good) / static_cast<double>(total);
    return out;
}

Outcome run_dae(const DaeArgs& a) {
    Manifest m("dae");
    const Dataset ds = load_dataset(a.src);
    record_data(m, a.src);
    const Matrix y = targets_for(ds, a.targets, m, a.src);
    const Matrix& x = ds.x.values();

    const NoiseModel family = parse_noise(a.noise, ds.meta.geometry);
    const std::vector<double> levels = a.p_grid.empty() ? std::vector<double>{noise_level(family)}
                                                         : parse_doubles(a.p_grid);
    const std::vector<Index> ks = parse_indices(a.k_list);
    std::vector<NoiseModel> models;
    for (double level : levels) {
        models.push_back(with_level(family, level));
        validate_noise(models.back(), x.rows());
    }
    for (Index k : ks) require_k_within_rank(ds, k);
    if (a.mc_check < 0 || (a.mc_check > 0 && a.mc_check < 2))
        throw Error(Errc::InvalidArgument, "--mc-check needs at least 2 draws");
    const auto mc_draws = static_cast<Index>(std::llround(a.mc_check));
    const bool gaussian = std::holds_alternative<AdditiveGaussian>(family);

    m.config()["noise"] = a.noise;
    m.config()["levels"] = levels;
    m.config()["k_list"] = ks;
    if (mc_draws > 0) {
        m.config()["mc_check"] = mc_draws;
        m.add_seed(a.seed);
    }

    const std::vector<DaeDeltaRow> rows = dae_alignment_delta(x, y, family, levels, ks);
    std::vector<double> deviation(ks.size());
    parallel_for(ks.size(), [&](std::size_t i) { deviation[i] = product_deviation(x, y, models, ks[i]); });
    std::vector<MomentCheck> checks(levels.size());
    if (mc_draws > 0)
        for (std::size_t i = 0; i < levels.size(); ++i) checks[i] = check_moments(models[i], x, mc_draws, a.seed);

    std::vector<std::string> columns{"p", "K", "score_clean", "score_noise", "delta", "product_deviation"};
    if (mc_draws > 0)
        for (const char* c : {"mc_draws", "mc_max_z", "mc_within_3se", "mc_pass"}) columns.emplace_back(c);
    CsvTable table("dae", columns);
    std::vector<PlotSeries> plots;
    for (Index k : ks) plots.push_back({"K=" + std::to_string(k), {}, {}});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const DaeDeltaRow& row = rows[r];
        const std::size_t li = r / ks.size(), ki = r % ks.size();
        std::vector<std::string> cells{fmt(row.level),       fmt(static_cast<long long>(row.k)),
                                       fmt(row.score_clean), fmt(row.score_noise),
                                       fmt(row.delta),       fmt(deviation[ki])};
        if (mc_draws > 0) {
            cells.push_back(fmt(static_cast<long long>(mc_draws)));
            cells.push_back(fmt(checks[li].max_z));
            cells.push_back(fmt(checks[li].within));
            cells.emplace_back(checks[li].within >= 0.99 ? "1" : "0");
        }
        table.add_row(std::move(cells));
        plots[ki].x.push_back(row.level);
        plots[ki].y.push_back(row.delta);
    }

    const double max_dev = *std::max_element(deviation.begin(), deviation.end());
    Json summary{{"noise_family", describe(family)}, {"max_product_deviation", max_dev}};
    if (gaussian) summary["gaussian_invariance_holds"] = max_dev <= 1e-8;
    if (mc_draws > 0)
        summary["mc_all_pass"] =
            std::all_of(checks.begin(), checks.end(), [](const MomentCheck& c) { return c.within >= 0.99; });
    std::cout << "max product deviation " << fmt(max_dev) << '\n';

    m.write_output(a.out, table.str());
    m.write_output(sibling(a.out, ".json"), summary.dump(2) + "\n");
    if (a.plot)
        m.write_output(sibling(a.out, ".svg"),
                       render_svg(plots, {"Alignment change under corruption", "noise level", "delta", false, false}));
    m.finish(a.out);

    if (gaussian && !(max_dev <= 1e-8)) {
        std::cerr << "raln: additive Gaussian noise changed the supervised map (deviation " << fmt(max_dev) << ")\n";
        return {3};
    }
    return {};
}

// --------------------------------------------------------------- filter-probe

struct FilterArgs {
    DataSource src;
    std::string mode = "both";
    std::optional<double> cut;
    std::optional<Index> cut_k;
    std::optional<double> ridge;
    bool center = false;
    double train_fraction = 0.75;
    std::string test_data;
    fs::path out;
    bool plot = false;
};

Outcome run_filter_probe(const FilterArgs& a) {
    Manifest m("filter-probe");
    const Dataset ds = load_dataset(a.src);
    record_data(m, a.src);
    if (a.cut.has_value() == a.cut_k.has_value())
        throw Error(Errc::InvalidArgument, "give exactly one of --cut and --cut-k");

    Dataset train, test;
    if (!a.test_data.empty()) {
        DataSource other{a.test_data, a.src.label_column, a.src.has_header};
        test = load_dataset(other);
        m.add_input(other.path);
        m.config()["test_data"] = a.test_data;
        if (test.x.rows() != ds.x.rows()) throw Error(Errc::ShapeMismatch, "test data has a different dimension");
        train = ds;
    } else {
        if (!(a.train_fraction > 0 && a.train_fraction < 1))
            throw Error(Errc::InvalidArgument, "--train-fraction must lie in (0, 1)");
        const auto n_train = static_cast<Index>(std::llround(a.train_fraction * static_cast<double>(ds.x.cols())));
        std::tie(train, test) = split_dataset(ds, n_train);
        m.config()["train_fraction"] = a.train_fraction;
    }
    m.config()["mode"] = a.mode;
    m.config()["center"] = a.center;
    if (a.cut) m.config()["cut"] = *a.cut;
    if (a.cut_k) m.config()["cut_k"] = *a.cut_k;
    m.config()["ridge"] = a.ridge ? Json(*a.ridge) : Json("auto");

    // "both" pairs the two modes at one boundary: top keeps fraction f,
    // bottom keeps the complementary 1 − f.
    struct Job {
        FilterMode mode;
        SubspaceCut cut;
        double cut_value;
    };
    std::vector<Job> jobs;
    auto push = [&](FilterMode mode) {
        if (a.cut_k) {
            jobs.push_back({mode, CountCut{*a.cut_k}, static_cast<double>(*a.cut_k)});
        } else {
            const double f = mode == FilterMode::Top || a.mode != "both" ? *a.cut : 1.0 - *a.cut;
            jobs.push_back({mode, FractionCut{f}, f});
        }
    };
    if (a.mode != "bottom") push(FilterMode::Top);
    if (a.mode != "top") push(FilterMode::Bottom);

    const Matrix y_train = one_hot(train.labels, train.num_classes);
    CsvTable table("filter-probe", {"mode", "cut_kind", "cut", "boundary", "kept_dims", "probe_accuracy"});
    std::vector<PlotSeries> bars;
    for (const Job& job : jobs) {
        const SubspaceFilter filter = fit_subspace_filter(train.x.values(), job.mode, job.cut, a.center);
        const double acc =
            linear_probe(filter.apply(train.x.values()), y_train, filter.apply(test.x.values()), test.labels, a.ridge);
        const char* name = job.mode == FilterMode::Top ? "top" : "bottom";
        table.add_row({name, a.cut_k ? "count" : "fraction", fmt(job.cut_value),
                       fmt(static_cast<long long>(filter.boundary)), fmt(static_cast<long long>(filter.kept().cols())),
                       fmt(acc)});
        bars.push_back({name, {0.0}, {acc}});
    }
    m.write_output(a.out, table.str());
    if (a.plot)
        m.write_output(sibling(a.out, ".svg"),
                       render_svg(bars, {"Probe accuracy on filtered data", "", "accuracy", false, true}));
    m.finish(a.out);
    return {};
}

// ------------------------------------------------------------------- dynamics

struct DynamicsArgs {
    DataSource src;
    std::string arch = "linear:1";
    std::string optimizer = "gd";
    double step_size = 1e-2;
    double init_scale = 1.0;
    Index steps = 1000;
    Index checkpoint_every = 10;
    std::uint64_t seed = 0;
    fs::path out;
    bool plot = false;
};

Outcome run_dynamics(const DynamicsArgs& a) {
    Manifest m("dynamics");
    const Dataset ds = load_dataset(a.src);
    record_data(m, a.src);
    const Architecture arch = parse_architecture(a.arch);
    OptimizerConfig config;
    config.kind = parse_optimizer(a.optimizer);
    config.step_size = a.step_size;
    config.init_scale = a.init_scale;
    config.steps = a.steps;
    config.seed = a.seed;
    if (a.checkpoint_every < 1) throw Error(Errc::InvalidArgument, "--checkpoint-every must be positive");
    m.config()["arch"] = describe(arch);
    m.config()["optimizer"] = describe(config.kind);
    m.config()["step_size"] = a.step_size;
    m.config()["init_scale"] = a.init_scale;
    m.config()["steps"] = a.steps;
    m.config()["checkpoint_every"] = a.checkpoint_every;
    m.add_seed(a.seed);

    DynamicsTrace trace;
    Outcome outcome;
    std::string failure;
    try {
        trace = train_autoencoder_gd(ds.x.values(), arch, config, a.checkpoint_every);
    } catch (const DivergenceError& e) {
        trace = e.partial_trace();
        failure = e.what();
        outcome.exit_code = 3;
    }

    CsvTable table("dynamics", {"step", "direction_index", "eigenvalue", "energy", "residual"});
    const Index dims = trace.eigenvalues.size();
    for (const Checkpoint& c : trace.checkpoints)
        for (Index i = 0; i < dims; ++i)
            table.add_row({fmt(static_cast<long long>(c.step)), fmt(static_cast<long long>(i + 1)),
                           fmt(trace.eigenvalues(i)), fmt(c.energy(i)), fmt(c.residual(i))});

    Json summary;
    summary["checkpoints"] = trace.checkpoints.size();
    summary["final_loss"] = trace.checkpoints.empty() ? Json(nullptr) : Json(trace.checkpoints.back().loss);
    std::vector<Index> crossing;
    for (Index i = 0; i < dims && !trace.checkpoints.empty(); ++i) crossing.push_back(first_crossing(trace, i));
    summary["half_residual_step"] = crossing;  // −1: never reached
    summary["diverged"] = outcome.exit_code != 0;

    m.write_output(a.out, table.str());
    m.write_output(sibling(a.out, ".json"), summary.dump(2) + "\n");
    if (a.plot) {
        std::vector<PlotSeries> plots;
        for (Index i = 0; i < std::min<Index>(dims, 10); ++i) {
            PlotSeries s{"direction " + std::to_string(i + 1), {}, {}};
            const double r0 = trace.checkpoints.empty() ? 1.0 : trace.checkpoints.front().residual(i);
            for (const Checkpoint& c : trace.checkpoints) {
                s.x.push_back(static_cast<double>(c.step));
                s.y.push_back(r0 > 0 ? c.residual(i) / r0 : 0.0);
            }
            plots.push_back(std::move(s));
        }
        m.write_output(sibling(a.out, ".svg"),
                       render_svg(plots, {"Residual per eigendirection", "step", "residual / initial", true, false}));
    }
    m.finish(a.out);
    if (!failure.empty()) std::cerr << "raln: " << failure << '\n';
    return outcome;
}

// ------------------------------------------------------------------------ gen

struct GenArgs {
    fs::path spec;
    fs::path out;
};

Outcome run_gen(const GenArgs& a) {
    Manifest m("gen");
    const std::string text = read_file(a.spec);
    Json parsed;
    try {
        parsed = Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(Errc::InvalidSpec, std::string("spec is not valid JSON: ") + e.what());
    }
    const SyntheticSpec spec = parse_synthetic_spec(parsed);
    m.add_input(a.spec);
    m.config()["spec"] = synthetic_spec_json(spec);
    m.add_seed(spec.seed);

    m.write_output(a.out, encode_container(generate_synthetic(spec)));
    m.finish(a.out);
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Representation alignment analyses"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RALN_VERSION);

    AlignArgs align;
    auto* c_align = app.add_subcommand("align-sweep", "Task alignment curve over the latent size");
    add_data_options(c_align, align.src);
    add_target_options(c_align, align.targets);
    c_align->add_flag("--center", align.center, "Subtract the per-feature mean first");
    c_align->add_option("--variant", align.variant, "Alignment energy")->check(CLI::IsMember({"gram", "proof"}));
    c_align->add_option("--out", align.out, "Output CSV")->required();
    c_align->add_flag("--plot", align.plot, "Also write an SVG next to the CSV");

    SolveArgs solve;
    auto* c_solve = app.add_subcommand("solve", "Closed-form optimum of the joint objective");
    add_data_options(c_solve, solve.src);
    add_target_options(c_solve, solve.targets);
    c_solve->add_option("--lambda", solve.lambda, "Reconstruction weight")->check(CLI::NonNegativeNumber);
    c_solve->add_option("--k", solve.k, "Latent size")->required();
    c_solve->add_option("--out", solve.out, "Output JSON; matrices go to the .bin sibling")->required();

    ValidateArgs validate;
    auto* c_validate = app.add_subcommand("validate", "Gradient descent against the closed form");
    add_data_options(c_validate, validate.src);
    add_target_options(c_validate, validate.targets);
    c_validate->add_option("--lambda-grid", validate.lambda_grid, "Comma-separated λ values");
    c_validate->add_option("--k", validate.k, "Latent size")->required();
    c_validate->add_option("--steps", validate.steps, "Optimizer steps");
    c_validate->add_option("--seed", validate.seed, "Initialization seed");
    c_validate->add_option("--step-size", validate.step_size, "Override the optimizer step size");
    c_validate->add_option("--record-every", validate.record_every, "Gap curve sampling interval");
    c_validate->add_option("--out", validate.out, "Output CSV")->required();
    c_validate->add_flag("--plot", validate.plot, "Also write an SVG next to the CSV");

    DaeArgs dae;
    auto* c_dae = app.add_subcommand("dae", "Linear denoising autoencoder alignment table");
    add_data_options(c_dae, dae.src);
    add_target_options(c_dae, dae.targets);
    c_dae->add_option("--noise", dae.noise, "gaussian:σ | dropout:p | mask:p:ph:pw")->required();
    c_dae->add_option("--k-list", dae.k_list, "Comma-separated latent sizes");
    c_dae->add_option("--p-grid", dae.p_grid, "Comma-separated noise levels (σ for gaussian)");
    c_dae->add_option("--mc-check", dae.mc_check, "Monte-Carlo draws for the moment check (0: off)");
    c_dae->add_option("--seed", dae.seed, "Monte-Carlo seed");
    c_dae->add_option("--out", dae.out, "Output CSV")->required();
    c_dae->add_flag("--plot", dae.plot, "Also write an SVG next to the CSV");

    FilterArgs filter;
    auto* c_filter = app.add_subcommand("filter-probe", "Linear probe on top or bottom subspace projections");
    add_data_options(c_filter, filter.src);
    c_filter->add_option("--mode", filter.mode, "Subspace to keep")->check(CLI::IsMember({"top", "bottom", "both"}));
    c_filter->add_option("--cut", filter.cut, "Variance fraction kept, in (0, 1]");
    c_filter->add_option("--cut-k", filter.cut_k, "Boundary as a direction count");
    c_filter->add_option("--ridge", filter.ridge, "Probe ridge (default: scaled to the data)");
    c_filter->add_flag("--center", filter.center, "Center with the training mean");
    c_filter->add_option("--train-fraction", filter.train_fraction, "Leading share of samples used for training");
    c_filter->add_option("--test-data", filter.test_data, "Separate test dataset");
    c_filter->add_option("--out", filter.out, "Output CSV")->required();
    c_filter->add_flag("--plot", filter.plot, "Also write an SVG next to the CSV");

    DynamicsArgs dyn;
    auto* c_dyn = app.add_subcommand("dynamics", "Per-eigendirection training trace of an autoencoder");
    add_data_options(c_dyn, dyn.src);
    c_dyn->add_option("--arch", dyn.arch, "linear:K | mlp:W1,W2[:tanh|relu]");
    c_dyn->add_option("--optimizer", dyn.optimizer, "gd | adam | lbfgs");
    c_dyn->add_option("--step-size", dyn.step_size, "Learning rate");
    c_dyn->add_option("--init-scale", dyn.init_scale, "Initial weight scale");
    c_dyn->add_option("--steps", dyn.steps, "Training steps");
    c_dyn->add_option("--checkpoint-every", dyn.checkpoint_every, "Checkpoint interval");
    c_dyn->add_option("--seed", dyn.seed, "Initialization seed");
    c_dyn->add_option("--out", dyn.out, "Output CSV")->required();
    c_dyn->add_flag("--plot", dyn.plot, "Also write an SVG next to the CSV");

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen", "Generate a synthetic dataset container");
    c_gen->add_option("--spec", gen.spec, "JSON dataset description")->required();
    c_gen->add_option("--out", gen.out, "Output container")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Outcome outcome;
        if (*c_align) outcome = run_align_sweep(align);
        else if (*c_solve) outcome = run_solve(solve);
        else if (*c_validate) outcome = run_validate(validate);
        else if (*c_dae) outcome = run_dae(dae);
        else if (*c_filter) outcome = run_filter_probe(filter);
        else if (*c_dyn) outcome = run_dynamics(dyn);
        else if (*c_gen) outcome = run_gen(gen);
        return outcome.exit_code;
    } catch (const Error& e) {
        std::cerr << "raln: " << e.what() << '\n';
        return is_math_error(e.code()) ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "raln: " << e.what() << '\n';
        return 2;
    }
}
