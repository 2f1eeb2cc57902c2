// sgvi: train, check, variance, generate and datagen commands.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error, 3 numeric abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgvi/sgvi.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sgvi;

namespace {

constexpr int kOk = 0, kCheckFailed = 1, kUsage = 2, kNumeric = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
    std::string model = "logistic";
    std::string optimizer = "hf";
    std::string data;
    std::string test_data;
    std::string format = "auto";
    std::string out = "run";
    std::uint64_t seed = 0;
    std::size_t batch_size = 0;  // 0: optimizer default, clamped to N
    std::size_t samples = 1;
    std::size_t max_outer = 100;
    int cg_iters = 10;
    double cg_tolerance = 1e-4;
    double cg_damping = 0.0;
    std::string preconditioner = "identity";
    bool line_search = false;
    std::size_t memory = 10;
    double learning_rate = 0.1;
    double shrinkage = 0.001;
    double init_scale = 0.01;
    double sigma0 = 1.0;
    std::string scale_param = "log_sigma";
    Index hidden = 200;
    Index latent_dim = 2;
    std::string likelihood = "bernoulli";
    double obs_variance = 1.0;
    std::size_t rows = 0;  // 0: all rows
    std::string clock = "passes";
    double max_seconds = 0.0;
};

json to_json(const RunConfig& c) {
    return json{{"model", c.model},
                {"optimizer", c.optimizer},
                {"data", c.data},
                {"test_data", c.test_data},
                {"format", c.format},
                {"out", c.out},
                {"seed", c.seed},
                {"batch_size", c.batch_size},
                {"samples", c.samples},
                {"max_outer", c.max_outer},
                {"cg_iters", c.cg_iters},
                {"cg_tolerance", c.cg_tolerance},
                {"cg_damping", c.cg_damping},
                {"preconditioner", c.preconditioner},
                {"line_search", c.line_search},
                {"memory", c.memory},
                {"learning_rate", c.learning_rate},
                {"shrinkage", c.shrinkage},
                {"init_scale", c.init_scale},
                {"sigma0", c.sigma0},
                {"scale_param", c.scale_param},
                {"hidden", c.hidden},
                {"latent_dim", c.latent_dim},
                {"likelihood", c.likelihood},
                {"obs_variance", c.obs_variance},
                {"rows", c.rows},
                {"clock", c.clock},
                {"max_seconds", c.max_seconds}};
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig from_json(const json& j) {
    RunConfig c;
    read_field(j, "model", c.model);
    read_field(j, "optimizer", c.optimizer);
    read_field(j, "data", c.data);
    read_field(j, "test_data", c.test_data);
    read_field(j, "format", c.format);
    read_field(j, "out", c.out);
    read_field(j, "seed", c.seed);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "samples", c.samples);
    read_field(j, "max_outer", c.max_outer);
    read_field(j, "cg_iters", c.cg_iters);
    read_field(j, "cg_tolerance", c.cg_tolerance);
    read_field(j, "cg_damping", c.cg_damping);
    read_field(j, "preconditioner", c.preconditioner);
    read_field(j, "line_search", c.line_search);
    read_field(j, "memory", c.memory);
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "shrinkage", c.shrinkage);
    read_field(j, "init_scale", c.init_scale);
    read_field(j, "sigma0", c.sigma0);
    read_field(j, "scale_param", c.scale_param);
    read_field(j, "hidden", c.hidden);
    read_field(j, "latent_dim", c.latent_dim);
    read_field(j, "likelihood", c.likelihood);
    read_field(j, "obs_variance", c.obs_variance);
    read_field(j, "rows", c.rows);
    read_field(j, "clock", c.clock);
    read_field(j, "max_seconds", c.max_seconds);
    return c;
}

std::string fmt17(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
    std::vector<T> out;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(static_cast<T>(v));
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
    return out;
}

// ---------------------------------------------------------------------------
// datasets

std::string detect_format(const RunConfig& c, const std::string& path) {
    if (c.format != "auto") return c.format;
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".csv") return "csv";
    if (ext == ".idx" || path.find("idx3-ubyte") != std::string::npos) return "idx";
    return c.model == "vae" ? "csv" : "libsvm";
}

std::ifstream open_input(const std::string& path) {
    if (path.empty()) throw UsageError("no dataset path given (--data)");
    const std::string resolved = resolve_data_path(path);
    std::ifstream in(resolved, std::ios::binary);
    if (!in) throw UsageError("cannot open dataset '" + resolved + "'");
    return in;
}

SparseDataset load_sparse(const RunConfig& c, const std::string& path) {
    const std::string fmt = detect_format(c, path);
    if (fmt != "libsvm") throw UsageError("logistic model expects LIBSVM data, got format '" + fmt + "'");
    std::ifstream in = open_input(path);
    return parse_libsvm(in);
}

DenseDataset load_dense(const RunConfig& c, const std::string& path) {
    const std::string fmt = detect_format(c, path);
    std::ifstream in = open_input(path);
    DenseDataset d;
    if (fmt == "idx") d = read_idx_images(in);
    else if (fmt == "csv") d = read_csv_matrix(in);
    else throw UsageError("VAE model expects IDX or CSV data, got format '" + fmt + "'");
    if (c.rows > 0 && c.rows < d.size()) {
        d.rows.conservativeResize(static_cast<Index>(c.rows), d.rows.cols());
        d.refresh_range();
    }
    return d;
}

std::pair<Index, Index> image_shape(Index d) {
    const auto s = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(d))));
    if (s * s == d) return {s, s};
    return {1, d};
}

// ---------------------------------------------------------------------------
// train

std::size_t resolve_batch(const RunConfig& c, std::size_t n) {
    std::size_t b = c.batch_size;
    if (b == 0) b = std::min<std::size_t>(c.optimizer == "hf" ? 500 : 100, n);
    return b;
}

RunOptions run_options(const RunConfig& c, std::size_t batch) {
    RunOptions o;
    o.batch_size = batch;
    o.samples = c.samples;
    o.max_outer = c.max_outer;
    o.seed = c.seed;
    o.max_seconds = c.max_seconds;
    return o;
}

template <LatentModel M>
RunResult optimize(const M& model, Vector theta0, const RunConfig& c, std::size_t batch) {
    const RunOptions run = run_options(c, batch);
    if (c.optimizer == "hf") {
        HFOptions o;
        o.run = run;
        o.cg.max_iters = c.cg_iters;
        o.cg.rel_tolerance = c.cg_tolerance;
        o.cg.damping = c.cg_damping;
        if (c.preconditioner == "jacobi") o.cg.preconditioner = Preconditioner::jacobi;
        else if (c.preconditioner != "identity") throw UsageError("unknown preconditioner '" + c.preconditioner + "'");
        o.line_search = c.line_search;
        return hfsgvi_run(model, std::move(theta0), o);
    }
    if (c.optimizer == "lbfgs") {
        LBFGSOptions o;
        o.run = run;
        o.memory = c.memory;
        return lbfgs_run(model, std::move(theta0), o);
    }
    if (c.optimizer == "adagrad") {
        AdagradOptions o;
        o.run = run;
        o.learning_rate = c.learning_rate;
        return adagrad_run(model, std::move(theta0), o);
    }
    throw UsageError("unknown optimizer '" + c.optimizer + "'");
}

void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw UsageError("cannot write " + p.string());
    out << s;
}

int cmd_train(RunConfig c) {
    if (c.model != "logistic" && c.model != "vae") throw UsageError("unknown model '" + c.model + "'");
    if (c.optimizer != "hf" && c.optimizer != "lbfgs" && c.optimizer != "adagrad")
        throw UsageError("unknown optimizer '" + c.optimizer + "'");
    if (c.clock != "passes" && c.clock != "wall") throw UsageError("clock must be 'passes' or 'wall'");
    const TraceClock clock = c.clock == "wall" ? TraceClock::wall : TraceClock::passes;

    json meta;
    RunResult result;
    Layout layout;
    std::string hash;
    std::ostringstream misclass;

    if (c.model == "logistic") {
        SparseDataset train = load_sparse(c, c.data);
        std::optional<SparseDataset> test;
        if (!c.test_data.empty()) {
            test = load_sparse(c, c.test_data);
            const Index n = std::max(train.n_features, test->n_features);
            train.n_features = test->n_features = n;
        }
        hash = dataset_hash(train);
        const ScaleParam sp = c.scale_param == "sigma" ? ScaleParam::sigma : ScaleParam::log_sigma;
        if (c.scale_param != "sigma" && c.scale_param != "log_sigma")
            throw UsageError("scale_param must be 'log_sigma' or 'sigma'");
        auto data = std::make_shared<const SparseDataset>(std::move(train));
        LogisticVBModel model(data, sp);
        c.batch_size = resolve_batch(c, model.num_data());
        result = optimize(model, model.initial_theta(c.sigma0), c, c.batch_size);
        layout = model.layout();
        meta = {{"model", "logistic"}, {"features", model.latent_dim()}, {"scale_param", c.scale_param}};
        misclass << "train_errors " << model.misclassified(result.theta, *data) << "\n";
        misclass << "train_size " << data->size() << "\n";
        if (test) {
            misclass << "test_errors " << model.misclassified(result.theta, *test) << "\n";
            misclass << "test_size " << test->size() << "\n";
        }
    } else {
        auto data = std::make_shared<const DenseDataset>(load_dense(c, c.data));
        hash = dataset_hash(*data);
        if (c.likelihood != "bernoulli" && c.likelihood != "gaussian")
            throw UsageError("likelihood must be 'bernoulli' or 'gaussian'");
        const VAEConfig vc{data->dim(), c.hidden, c.latent_dim,
                           c.likelihood == "gaussian" ? Likelihood::gaussian : Likelihood::bernoulli, c.shrinkage,
                           c.obs_variance};
        VAEModel model(vc, data);
        c.batch_size = resolve_batch(c, model.num_data());
        result = optimize(model, model.initialize(c.init_scale, derive_seed(c.seed, 0x696e6974)), c, c.batch_size);
        layout = model.layout();
        const auto [r, k] = image_shape(vc.input_dim);
        meta = {{"model", "vae"},         {"input_dim", vc.input_dim}, {"hidden_dim", vc.hidden_dim},
                {"latent_dim", vc.latent_dim}, {"likelihood", c.likelihood}, {"shrinkage", c.shrinkage},
                {"obs_variance", c.obs_variance}, {"image_rows", r},  {"image_cols", k}};
    }

    const fs::path dir(c.out);
    fs::create_directories(dir);
    write_trace_csv((dir / "trace.csv").string(), result.trace, clock);
    json cfg = to_json(c);
    cfg["data_hash"] = hash;
    write_text(dir / "config.json", cfg.dump(2) + "\n");
    save_theta((dir / "theta.bin").string(), layout, result.theta, meta.dump());
    if (c.model == "logistic") write_text(dir / "misclassification.txt", misclass.str());

    const auto& last = result.trace.back();
    std::cout << "iterations " << result.trace.size() << "  final elbo estimate " << fmt17(last.elbo) << "\n";
    if (c.model == "logistic") std::cout << misclass.str();
    return kOk;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    std::string which = "grad";
    std::string model = "vae";
    Index d = 8;
    Index dz = 3;
    Index hidden = 5;
    int configs = 20;
    std::uint64_t seed = 0;
    std::size_t samples = 1000000;
    int corrupt = -1;  // planted coordinate, -1 off
    std::string csv;
};

Vector normal_vector(Rng& r, Index n, double scale) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = scale * r.normal();
    return v;
}

// Random logistic problem with n_features = d (column 0 constant).
std::shared_ptr<const SparseDataset> random_logistic_data(Rng& r, Index d, std::size_t n) {
    SparseDataset ds;
    ds.n_features = d;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Index> idx{0};
        std::vector<double> val{1.0};
        for (Index j = 1; j < d; ++j) {
            if (r.uniform() < 0.6) {
                idx.push_back(j);
                val.push_back(r.normal());
            }
        }
        ds.add_row(r.uniform() < 0.5 ? 1 : -1, idx, val);
    }
    return std::make_shared<const SparseDataset>(std::move(ds));
}

std::shared_ptr<const DenseDataset> random_binary_data(Rng& r, Index d, std::size_t n) {
    DenseDataset ds;
    ds.rows.resize(static_cast<Index>(n), d);
    for (Index i = 0; i < ds.rows.size(); ++i) ds.rows.data()[i] = r.uniform() < 0.5 ? 0.0 : 1.0;
    ds.refresh_range();
    return std::make_shared<const DenseDataset>(std::move(ds));
}

struct Problem {
    std::function<ValueGrad(const Vector&)> value_grad;
    std::function<Vector(const Vector&, const Vector&)> hv;
    Vector theta;
    std::string label;
};

// One random configuration with frozen noise: value/gradient and Hv closures.
Problem make_problem(const CheckArgs& a, int k) {
    Rng r(derive_seed(a.seed, static_cast<std::uint64_t>(k)));
    Problem p;
    if (a.model == "logistic") {
        auto data = random_logistic_data(r, a.d, 6);
        auto model = std::make_shared<LogisticVBModel>(data, k % 2 ? ScaleParam::sigma : ScaleParam::log_sigma);
        p.theta = model->initial_theta(0.5 + r.uniform());
        p.theta.head(model->latent_dim()) = normal_vector(r, model->latent_dim(), 0.5);
        auto batch = std::make_shared<std::vector<std::size_t>>(full_batch(model->num_data()));
        auto eps = std::make_shared<NoiseDraws>(draw_batch_noise(r.next_u64(), batch->size(), 2, model->latent_dim()));
        p.value_grad = [=](const Vector& t) {
            GradientEstimate g = batch_gradient(*model, t, *batch, *eps);
            return ValueGrad{g.elbo_estimate, std::move(g.grad)};
        };
        p.hv = [=](const Vector& t, const Vector& v) { return hv_rop(*model, t, v, *batch, *eps); };
        p.label = "logistic d=" + std::to_string(a.d);
    } else if (a.model == "vae") {
        auto data = random_binary_data(r, a.d, 3);
        const VAEConfig vc{a.d, a.hidden, a.dz, k % 2 ? Likelihood::gaussian : Likelihood::bernoulli, 0.01, 0.8};
        auto model = std::make_shared<VAEModel>(vc, data);
        p.theta = model->initialize(0.7, r.next_u64());
        p.theta += normal_vector(r, model->param_dim(), 0.1);
        auto batch = std::make_shared<std::vector<std::size_t>>(full_batch(model->num_data()));
        auto eps = std::make_shared<NoiseDraws>(draw_batch_noise(r.next_u64(), batch->size(), 1, a.dz));
        p.value_grad = [=](const Vector& t) {
            GradientEstimate g = batch_gradient(*model, t, *batch, *eps);
            return ValueGrad{g.elbo_estimate, std::move(g.grad)};
        };
        p.hv = [=](const Vector& t, const Vector& v) { return hv_rop(*model, t, v, *batch, *eps); };
        p.label = "vae D=" + std::to_string(a.d) + " H=" + std::to_string(a.hidden) + " dz=" + std::to_string(a.dz);
    } else {
        throw UsageError("unknown model '" + a.model + "'");
    }
    return p;
}

int check_grad(const CheckArgs& a, std::ostream& csv) {
    csv << "config,max_rel_error,worst_coordinate\n";
    double worst = 0.0;
    Index worst_coord = -1;
    int worst_cfg = -1;
    for (int k = 0; k < a.configs; ++k) {
        Problem p = make_problem(a, k);
        auto f = p.value_grad;
        if (a.corrupt >= 0) {
            if (a.corrupt >= p.theta.size()) throw UsageError("corrupt coordinate out of range");
            f = [inner = p.value_grad, c = a.corrupt](const Vector& t) {
                ValueGrad vg = inner(t);
                vg.grad[c] *= 1.01;
                return vg;
            };
        }
        const FiniteDiffReport rep = finite_diff_check(f, p.theta);
        csv << k << "," << fmt17(rep.max_rel_error) << "," << rep.worst_coordinate << "\n";
        if (rep.max_rel_error >= worst) {
            worst = rep.max_rel_error;
            worst_coord = rep.worst_coordinate;
            worst_cfg = k;
        }
    }
    const Problem p0 = make_problem(a, 0);
    std::cout << "gradient check (" << p0.label << ", " << a.configs << " configurations)\n";
    std::cout << "max relative error " << fmt17(worst) << " at config " << worst_cfg << " coordinate " << worst_coord
              << "\n";
    const bool ok = worst < 1e-5;
    if (!ok) std::cout << "FAIL: gradient coordinate " << worst_coord << " exceeds tolerance 1e-5\n";
    else std::cout << "PASS\n";
    return ok ? kOk : kCheckFailed;
}

int check_hv(const CheckArgs& a, std::ostream& csv) {
    csv << "config,max_rel_error\n";
    double worst = 0.0;
    for (int k = 0; k < a.configs; ++k) {
        Problem p = make_problem(a, k);
        Rng r(derive_seed(a.seed ^ 0x6876, static_cast<std::uint64_t>(k)));
        const Vector v = normal_vector(r, p.theta.size(), 1.0);
        Vector hv = p.hv(p.theta, v);
        if (a.corrupt >= 0) {
            if (a.corrupt >= hv.size()) throw UsageError("corrupt coordinate out of range");
            hv[a.corrupt] *= 1.01;
        }
        const double g = 1e-5;
        const Vector fd = (p.value_grad(p.theta + g * v).grad - p.value_grad(p.theta - g * v).grad) / (2 * g);
        const double err = (hv - fd).norm() / std::max(fd.norm(), 1e-300);
        csv << k << "," << fmt17(err) << "\n";
        worst = std::max(worst, err);
    }
    std::cout << "Hessian-vector check (" << make_problem(a, 0).label << ", " << a.configs << " configurations)\n";
    std::cout << "max relative error vs gradient finite difference " << fmt17(worst) << "\n";
    const bool ok = worst < 1e-4;
    std::cout << (ok ? "PASS\n" : "FAIL: Hv relative error exceeds tolerance 1e-4\n");
    return ok ? kOk : kCheckFailed;
}

int check_identities(const CheckArgs& a, std::ostream& csv) {
    csv << "function,identity,coordinate,analytic,monte_carlo,standard_error,gap_se\n";
    bool ok = true;
    for (const auto& f : builtin_polynomials()) {
        Vector mu(f.dim()), var(f.dim());
        for (Index j = 0; j < f.dim(); ++j) {
            mu[j] = 0.5 - 0.4 * static_cast<double>(j);
            var[j] = 0.8 + 0.3 * static_cast<double>(j);
        }
        const IdentityReport rep = identity_suite(f, mu, var, a.samples, a.seed);
        for (const auto& c : rep.checks) {
            csv << f.name() << "," << c.identity << "," << c.coordinate << "," << fmt17(c.analytic) << ","
                << fmt17(c.monte_carlo) << "," << fmt17(c.standard_error) << "," << fmt17(c.gap_se) << "\n";
            if (!c.passed(5.0)) {
                ok = false;
                std::cout << "FAIL: " << f.name() << " " << c.identity << " coordinate " << c.coordinate << " gap "
                          << c.gap_se << " SE\n";
            }
        }
        std::cout << std::left << std::setw(14) << f.name() << " max gap " << std::setprecision(4) << rep.max_gap_se()
                  << " SE\n";
    }
    std::cout << (ok ? "PASS\n" : "FAIL\n");
    return ok ? kOk : kCheckFailed;
}

int cmd_check(const CheckArgs& a) {
    std::ostringstream csv;
    int rc;
    if (a.which == "grad") rc = check_grad(a, csv);
    else if (a.which == "hv") rc = check_hv(a, csv);
    else if (a.which == "identities") rc = check_identities(a, csv);
    else throw UsageError("--which must be grad, hv or identities");
    if (!a.csv.empty()) write_text(a.csv, csv.str());
    return rc;
}

// ---------------------------------------------------------------------------
// variance

struct VarianceArgs {
    std::string function = "all";
    std::string dims = "1,10,100,1000";
    std::size_t trials = 100000;
    std::uint64_t seed = 0;
    std::string tail_samples = "1,10,100";
    std::string tail_t = "0.25,0.5,1.0";
    std::string out;
};

int cmd_variance(const VarianceArgs& a) {
    if (a.trials < 1000) throw UsageError("at least 1000 trials are required (got " + std::to_string(a.trials) + ")");
    const auto dims = parse_list<Index>(a.dims, "dimension");
    const auto ms = parse_list<std::size_t>(a.tail_samples, "sample count");
    const auto ts = parse_list<double>(a.tail_t, "t");
    std::vector<LipschitzFunction> fns;
    if (a.function == "all") fns = builtin_lipschitz_functions();
    else fns.push_back(lipschitz_function_by_name(a.function));

    std::ostringstream vcsv, tcsv;
    vcsv << "function,dim,variance,standard_error,bound,loose_bound,within_bound\n";
    tcsv << "function,samples,t,frequency,standard_error,bound,within_bound\n";
    bool ok = true;
    for (const auto& fn : fns) {
        const VarianceReport v = variance_study(fn, dims, a.trials, a.seed);
        std::cout << fn.name << " (L = " << fn.lipschitz << ")\n";
        for (const auto& r : v.rows) {
            vcsv << fn.name << "," << r.dim << "," << fmt17(r.variance) << "," << fmt17(r.standard_error) << ","
                 << fmt17(r.bound) << "," << fmt17(r.loose_bound) << "," << (r.within_bound ? 1 : 0) << "\n";
            std::cout << "  d=" << std::setw(5) << r.dim << "  var " << std::setprecision(6) << r.variance << "  bound "
                      << r.bound << (r.within_bound ? "" : "  EXCEEDED") << "\n";
        }
        std::cout << "  slope vs log10 d: " << v.slope << " (SE " << v.slope_se << ")\n";
        if (!v.bound_holds()) ok = false;
        const TailReport t = tail_study(fn, ms, ts, a.trials, a.seed);
        for (const auto& r : t.rows) {
            tcsv << fn.name << "," << r.samples << "," << fmt17(r.t) << "," << fmt17(r.frequency) << ","
                 << fmt17(r.standard_error) << "," << fmt17(r.bound) << "," << (r.within_bound ? 1 : 0) << "\n";
        }
        if (!t.bound_holds()) ok = false;
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_text(fs::path(a.out) / "variance.csv", vcsv.str());
        write_text(fs::path(a.out) / "tail.csv", tcsv.str());
    }
    std::cout << (ok ? "PASS\n" : "FAIL: empirical variance or tail frequency exceeds its bound\n");
    return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const std::string& theta_path, Index side, const std::string& out) {
    const ThetaFile tf = [&] {
        try {
            return load_theta(theta_path);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }();
    json meta;
    try {
        meta = json::parse(tf.metadata);
    } catch (const std::exception&) {
        throw UsageError("theta file metadata is not JSON; layout mismatch");
    }
    if (meta.value("model", "") != "vae") throw UsageError("layout mismatch: theta file does not hold a VAE");
    const VAEConfig vc{meta.at("input_dim").get<Index>(), meta.at("hidden_dim").get<Index>(),
                       meta.at("latent_dim").get<Index>(),
                       meta.value("likelihood", "bernoulli") == "gaussian" ? Likelihood::gaussian : Likelihood::bernoulli,
                       meta.value("shrinkage", 0.001), meta.value("obs_variance", 1.0)};
    if (!(tf.layout == VAEModel::make_layout(vc))) throw UsageError("layout mismatch: slices differ from a VAE layout");
    if (vc.latent_dim != 2) throw UsageError("generate needs a 2-D latent space (d_z = " + std::to_string(vc.latent_dim) + ")");
    const Index rows = meta.value("image_rows", Index{1}), cols = meta.value("image_cols", vc.input_dim);
    if (rows * cols != vc.input_dim) throw UsageError("image shape does not match input dimension");
    VAEModel model(vc, nullptr);
    const RowMatrix imgs = model.generate(tf.values, side);
    std::vector<Vector> tiles;
    for (Index i = 0; i < imgs.rows(); ++i) tiles.emplace_back(imgs.row(i).transpose());
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    const PgmInfo info = write_pgm_grid(tiles, rows, cols, side, side, out);
    std::cout << "wrote " << out << " (" << info.width << " x " << info.height << ")";
    if (info.clamped) std::cout << ", " << info.clamped << " values clamped";
    std::cout << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// datagen

int cmd_datagen(const std::string& kind, const std::string& out, std::uint64_t seed, std::size_t n, Index d,
                Index side) {
    if (out.empty()) throw UsageError("--out is required");
    if (kind == "logistic") {
        const SparseDataset ds = make_separable_logistic(seed, n == 0 ? 200 : n, d);
        std::ostringstream s;
        write_libsvm(s, ds);
        write_text(out, s.str());
    } else if (kind == "bars") {
        const DenseDataset ds = make_binary_bars(seed, n == 0 ? 1000 : n, side);
        std::ostringstream s;
        write_csv_matrix(s, ds.rows);
        write_text(out, s.str());
    } else {
        throw UsageError("--kind must be 'logistic' or 'bars'");
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Second-order stochastic Gaussian variational inference"};
    app.require_subcommand(1);

    // train
    RunConfig flags;
    std::string config_path;
    auto* train = app.add_subcommand("train", "fit a model and write trace.csv, config.json, theta.bin");
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
    auto bind = [&](const std::string& name, auto RunConfig::*member, const std::string& help) {
        CLI::Option* o = train->add_option(name, flags.*member, help);
        overrides.emplace_back(o, [&flags, member](RunConfig& c) { c.*member = flags.*member; });
    };
    train->add_option("--config", config_path, "start from a config.json; explicit flags override it");
    bind("--model", &RunConfig::model, "logistic | vae");
    bind("--optimizer", &RunConfig::optimizer, "hf | lbfgs | adagrad");
    bind("--data", &RunConfig::data, "training data (LIBSVM for logistic, IDX or CSV for vae)");
    bind("--test-data", &RunConfig::test_data, "held-out LIBSVM data for misclassification counts");
    bind("--format", &RunConfig::format, "auto | libsvm | idx | csv");
    bind("--out", &RunConfig::out, "output directory");
    bind("--seed", &RunConfig::seed, "random seed");
    bind("--batch", &RunConfig::batch_size, "minibatch size B (default 500 for hf, 100 otherwise, at most N)");
    bind("--samples", &RunConfig::samples, "noise samples per datapoint M");
    bind("--max-outer", &RunConfig::max_outer, "outer iterations");
    bind("--cg-iters", &RunConfig::cg_iters, "CG iterations K");
    bind("--cg-tol", &RunConfig::cg_tolerance, "CG relative residual tolerance");
    bind("--damping", &RunConfig::cg_damping, "CG damping");
    bind("--preconditioner", &RunConfig::preconditioner, "identity | jacobi");
    bind("--memory", &RunConfig::memory, "L-BFGS memory");
    bind("--lr", &RunConfig::learning_rate, "Adagrad learning rate");
    bind("--shrinkage", &RunConfig::shrinkage, "VAE decoder weight penalty");
    bind("--init-scale", &RunConfig::init_scale, "VAE weight initialization scale");
    bind("--sigma0", &RunConfig::sigma0, "logistic initial posterior scale");
    bind("--scale-param", &RunConfig::scale_param, "log_sigma | sigma");
    bind("--hidden", &RunConfig::hidden, "VAE hidden units");
    bind("--dz", &RunConfig::latent_dim, "latent dimension");
    bind("--likelihood", &RunConfig::likelihood, "bernoulli | gaussian");
    bind("--obs-variance", &RunConfig::obs_variance, "Gaussian likelihood variance");
    bind("--rows", &RunConfig::rows, "use only the first N rows of the data (0 = all)");
    bind("--clock", &RunConfig::clock, "trace time column: passes (deterministic) | wall");
    bind("--max-seconds", &RunConfig::max_seconds, "wall-clock budget (0 = none)");
    CLI::Option* ls = train->add_flag("--line-search", flags.line_search, "backtracking on HF steps");
    overrides.emplace_back(ls, [&](RunConfig& c) { c.line_search = flags.line_search; });

    // check
    CheckArgs ca;
    auto* check = app.add_subcommand("check", "gradient, Hessian-vector and identity verification");
    check->add_option("--which", ca.which, "grad | hv | identities");
    check->add_option("--model", ca.model, "logistic | vae");
    check->add_option("--d", ca.d, "input dimension (vae) or feature count (logistic)");
    check->add_option("--dz", ca.dz, "VAE latent dimension");
    check->add_option("--hidden", ca.hidden, "VAE hidden units");
    check->add_option("--configs", ca.configs, "random configurations");
    check->add_option("--seed", ca.seed, "random seed");
    check->add_option("--samples", ca.samples, "Monte-Carlo samples for identities");
    check->add_option("--corrupt", ca.corrupt, "self-test: scale this gradient coordinate by 1.01");
    check->add_option("--csv", ca.csv, "write the report as CSV");

    // variance
    VarianceArgs va;
    auto* variance = app.add_subcommand("variance", "variance and tail bounds of Lipschitz functions");
    variance->add_option("--function", va.function, "all | " + [] {
        std::string s;
        for (const auto& n : builtin_lipschitz_names()) s += (s.empty() ? "" : " | ") + n;
        return s;
    }());
    variance->add_option("--dims", va.dims, "comma-separated dimensions");
    variance->add_option("--trials", va.trials, "draws per dimension (>= 1000)");
    variance->add_option("--seed", va.seed, "random seed");
    variance->add_option("--tail-samples", va.tail_samples, "comma-separated M values");
    variance->add_option("--tail-t", va.tail_t, "comma-separated t values");
    variance->add_option("--out", va.out, "directory for variance.csv and tail.csv");

    // generate
    std::string theta_path, gen_out = "manifold.pgm";
    Index side = 20;
    auto* generate = app.add_subcommand("generate", "decode a latent grid of a 2-D VAE into a PGM image");
    generate->add_option("--theta", theta_path, "theta.bin from a VAE run")->required();
    generate->add_option("--side", side, "grid side");
    generate->add_option("--out", gen_out, "output PGM path");

    // datagen
    std::string kind = "logistic", data_out;
    std::uint64_t data_seed = 1;
    std::size_t data_n = 0;
    Index data_d = 5, data_side = 8;
    auto* datagen = app.add_subcommand("datagen", "write a bundled synthetic dataset");
    datagen->add_option("--kind", kind, "logistic (separable LIBSVM) | bars (binary CSV images)");
    datagen->add_option("--out", data_out, "output file")->required();
    datagen->add_option("--seed", data_seed, "random seed");
    datagen->add_option("--n", data_n, "rows (default 200 logistic, 1000 bars)");
    datagen->add_option("--d", data_d, "logistic feature count");
    datagen->add_option("--side", data_side, "bars image side");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*train) {
            RunConfig c;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw UsageError("cannot open config '" + config_path + "'");
                try {
                    c = from_json(json::parse(in));
                } catch (const json::exception& e) {
                    throw UsageError(std::string("bad config: ") + e.what());
                }
            }
            for (auto& [opt, apply] : overrides)
                if (opt->count() > 0) apply(c);
            return cmd_train(c);
        }
        if (*check) return cmd_check(ca);
        if (*variance) return cmd_variance(va);
        if (*generate) return cmd_generate(theta_path, side, gen_out);
        if (*datagen) return cmd_datagen(kind, data_out, data_seed, data_n, data_d, data_side);
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kNumeric;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
