#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "avar/baselines.hpp"
#include "avar/error.hpp"
#include "avar/estimators.hpp"
#include "avar/harness.hpp"
#include "avar/lfa.hpp"
#include "avar/linear_sa.hpp"
#include "avar/markov.hpp"
#include "avar/rate_fit.hpp"
#include "avar/rl.hpp"

namespace py = pybind11;
using namespace avar;

namespace {

Start parse_start(const py::object& start) {
    if (start.is_none()) return Start::from_stationary();
    if (py::isinstance<py::str>(start)) {
        if (start.cast<std::string>() != "stationary")
            throw Error(ErrorKind::InvalidStart, "start must be a state index or \"stationary\"");
        return Start::from_stationary();
    }
    return Start::at(start.cast<Index>());
}

StepSchedule schedule(double alpha, std::optional<double> h) {
    StepSchedule s = h ? StepSchedule::diminishing(alpha, *h) : StepSchedule::constant(alpha);
    s.validate();
    return s;
}

RunOptions run_options(const py::object& start, std::int64_t record_every) {
    RunOptions opts;
    opts.start = parse_start(start);
    opts.record_every = record_every;
    return opts;
}

template <class State>
py::dict trace_dict(const Trace<State>& tr, py::object final_state) {
    std::vector<double> kappa;
    kappa.reserve(tr.scalars.size());
    for (const auto& s : tr.scalars) kappa.push_back(s.kappa);
    py::dict d;
    d["final"] = std::move(final_state);
    d["kappa"] = kappa;
    d["max_projection_residual"] = tr.max_projection_residual;
    return d;
}

py::dict tabular_dict(const TabularState& s) {
    py::dict d;
    d["f_bar"] = s.f_bar;
    d["v"] = s.v;
    d["v_bar"] = s.v_bar;
    d["kappa"] = s.kappa;
    d["k"] = s.k;
    return d;
}

py::dict lfa_dict(const LFAState& s) {
    py::dict d;
    d["f_bar"] = s.f_bar;
    d["theta"] = s.theta;
    d["v_tilde"] = s.v_tilde;
    d["kappa"] = s.kappa;
    d["k"] = s.k;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Recursive asymptotic-variance estimators for finite Markov chains";

    // Leaked on purpose: the exception type must outlive interpreter teardown.
    static auto* error_type = new py::object(py::exception<Error>(m, "AvarError"));
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object inst = (*error_type)(e.what());
            inst.attr("kind") = to_string(e.kind());
            PyErr_SetObject(error_type->ptr(), inst.ptr());
        }
    });

    py::class_<SAConstants>(m, "SAConstants")
        .def(py::init<double, double, double>(), py::arg("c1"), py::arg("c2"), py::arg("c3"))
        .def_readwrite("c1", &SAConstants::c1)
        .def_readwrite("c2", &SAConstants::c2)
        .def_readwrite("c3", &SAConstants::c3)
        .def("__repr__", [](const SAConstants& c) {
            return "SAConstants(c1=" + std::to_string(c.c1) + ", c2=" + std::to_string(c.c2) +
                   ", c3=" + std::to_string(c.c3) + ")";
        });

    m.def("is_valid_chain", [](const Matrix& p) { return validate_chain(p).ok(); }, py::arg("P"));
    m.def("chain_period", [](const Matrix& p) { return validate_chain(p).period; }, py::arg("P"));
    m.def("stationary_distribution",
          [](const Matrix& p) { return stationary_distribution(TransitionMatrix(p)).pi; }, py::arg("P"));
    m.def(
        "solve_poisson",
        [](const Matrix& p, const Vector& f) {
            const TransitionMatrix tp(p);
            const auto sol = solve_poisson(tp, f, stationary_distribution(tp));
            return py::make_tuple(sol.v_star, sol.f_bar);
        },
        py::arg("P"), py::arg("f"));
    m.def(
        "exact_kappa",
        [](const Matrix& p, const Vector& f, const std::string& method) {
            const TransitionMatrix tp(p);
            KappaMethod km = KappaMethod::Poisson;
            if (method == "difference") km = KappaMethod::Difference;
            else if (method != "poisson") throw Error(ErrorKind::InvalidConfig, "method must be poisson or difference");
            return exact_kappa(tp, f, stationary_distribution(tp), km);
        },
        py::arg("P"), py::arg("f"), py::arg("method") = "poisson");
    m.def(
        "exact_kappa_truncated",
        [](const Matrix& p, const Vector& f, std::int64_t n_lags) {
            const TransitionMatrix tp(p);
            return exact_kappa_truncated(tp, f, stationary_distribution(tp), n_lags);
        },
        py::arg("P"), py::arg("f"), py::arg("n_lags"));
    m.def(
        "exact_covariance",
        [](const Matrix& p, const Matrix& f) {
            const TransitionMatrix tp(p);
            return exact_covariance(tp, StateFunction(f), stationary_distribution(tp));
        },
        py::arg("P"), py::arg("F"));
    m.def(
        "delta_one",
        [](const Matrix& p) {
            const TransitionMatrix tp(p);
            return delta_one(tp, stationary_distribution(tp));
        },
        py::arg("P"));
    m.def(
        "simulate",
        [](const Matrix& p, std::int64_t n, std::uint64_t seed, const py::object& start) {
            return simulate(TransitionMatrix(p), parse_start(start), n, seed).states;
        },
        py::arg("P"), py::arg("n"), py::arg("seed"), py::arg("start") = py::none());

    m.def("suggest_constants", &suggest_constants, py::arg("delta"));
    m.def(
        "constants_violations",
        [](double delta, const SAConstants& c) { return validate_constants(delta, c).violations; },
        py::arg("delta"), py::arg("c"));
    m.def("eta", &eta, py::arg("c"));
    m.def(
        "theorem_bound",
        [](double delta, const SAConstants& c, double theta_norm, double alpha, std::optional<double> h,
           std::int64_t n, double b) {
            return theorem_bound(variance_bound_params(delta, c, theta_norm, b), schedule(alpha, h), n);
        },
        py::arg("delta"), py::arg("c"), py::arg("theta_norm"), py::arg("alpha"), py::arg("h") = py::none(),
        py::arg("n") = 0, py::arg("B") = 2.0);

    m.def(
        "run_tabular",
        [](const Matrix& p, const Vector& f, const SAConstants& c, double alpha, std::int64_t n,
           std::uint64_t seed, std::optional<double> h, const py::object& start) {
            const auto tr = run_tabular(TransitionMatrix(p), f, schedule(alpha, h), c, n, seed, run_options(start, 0));
            return trace_dict(tr, tabular_dict(tr.final_state));
        },
        py::arg("P"), py::arg("f"), py::arg("c"), py::arg("alpha"), py::arg("n"), py::arg("seed"),
        py::arg("h") = py::none(), py::arg("start") = py::none());
    m.def(
        "run_stationary",
        [](const Matrix& p, const Vector& f, double c, double alpha, std::int64_t n, std::uint64_t seed,
           std::optional<double> h, const py::object& start) {
            const auto tr =
                run_stationary(TransitionMatrix(p), f, schedule(alpha, h), {c}, n, seed, run_options(start, 0));
            py::dict fin;
            fin["f_bar"] = tr.final_state.f_bar;
            fin["v"] = tr.final_state.v;
            fin["k"] = tr.final_state.k;
            return trace_dict(tr, fin);
        },
        py::arg("P"), py::arg("f"), py::arg("c"), py::arg("alpha"), py::arg("n"), py::arg("seed"),
        py::arg("h") = py::none(), py::arg("start") = py::none());
    m.def(
        "run_covariance",
        [](const Matrix& p, const Matrix& f, const SAConstants& c, double alpha, std::int64_t n,
           std::uint64_t seed, std::optional<double> h, const py::object& start) {
            const auto tr = run_covariance(TransitionMatrix(p), StateFunction(f), schedule(alpha, h), c, n, seed,
                                           run_options(start, 0));
            py::dict fin;
            fin["f_bar"] = tr.final_state.f_bar;
            fin["v"] = tr.final_state.v;
            fin["v_bar"] = tr.final_state.v_bar;
            fin["c"] = tr.final_state.c;
            fin["k"] = tr.final_state.k;
            return trace_dict(tr, fin);
        },
        py::arg("P"), py::arg("F"), py::arg("c"), py::arg("alpha"), py::arg("n"), py::arg("seed"),
        py::arg("h") = py::none(), py::arg("start") = py::none());
    m.def(
        "run_lfa",
        [](const Matrix& p, const Vector& f, const Matrix& phi, const SAConstants& c, double alpha,
           std::int64_t n, std::uint64_t seed, std::optional<double> h, const py::object& start) {
            const FeatureMatrix fm(phi);
            const auto tr = run_lfa(TransitionMatrix(p), f, fm, build_projection(fm), schedule(alpha, h), c, n, seed,
                                    run_options(start, 0));
            return trace_dict(tr, lfa_dict(tr.final_state));
        },
        py::arg("P"), py::arg("f"), py::arg("Phi"), py::arg("c"), py::arg("alpha"), py::arg("n"),
        py::arg("seed"), py::arg("h") = py::none(), py::arg("start") = py::none());

    m.def(
        "delta_two",
        [](const Matrix& p, const Matrix& phi) {
            const TransitionMatrix tp(p);
            const FeatureMatrix fm(phi);
            return delta_two(tp, stationary_distribution(tp), fm, build_projection(fm));
        },
        py::arg("P"), py::arg("Phi"));
    m.def(
        "theta_star",
        [](const Matrix& p, const Matrix& phi, const Vector& f) {
            const TransitionMatrix tp(p);
            const FeatureMatrix fm(phi);
            const auto ts = theta_star(tp, stationary_distribution(tp), fm, build_projection(fm), f);
            return py::make_tuple(ts.theta, ts.v_tilde, ts.kappa_star);
        },
        py::arg("P"), py::arg("Phi"), py::arg("f"));
    m.def(
        "min_approx_error",
        [](const Matrix& p, const Matrix& phi, const Vector& f) {
            const TransitionMatrix tp(p);
            return min_approx_error(tp, stationary_distribution(tp), FeatureMatrix(phi), f);
        },
        py::arg("P"), py::arg("Phi"), py::arg("f"));

    m.def(
        "kappa_mu",
        [](const std::vector<Matrix>& p, const Matrix& r, const Matrix& mu) { return kappa_mu(MDP(p, r), Policy(mu)); },
        py::arg("p"), py::arg("r"), py::arg("mu"));
    m.def(
        "average_reward",
        [](const std::vector<Matrix>& p, const Matrix& r, const Matrix& mu) {
            return average_reward_oracle(MDP(p, r), Policy(mu));
        },
        py::arg("p"), py::arg("r"), py::arg("mu"));

    m.def(
        "batch_means",
        [](const std::vector<double>& values, std::int64_t batch_size, bool overlapping) {
            return batch_means(values, {batch_size, overlapping ? BatchMode::Overlapping : BatchMode::NonOverlapping});
        },
        py::arg("values"), py::arg("batch_size"), py::arg("overlapping") = false);
    m.def(
        "fit_loglog_slope",
        [](const std::vector<std::pair<double, double>>& pts) {
            const SlopeFit fit = fit_loglog_slope(pts);
            return py::make_tuple(fit.slope, fit.intercept);
        },
        py::arg("points"));

    m.def(
        "run_sweep",
        [](const std::filesystem::path& config, std::optional<std::int64_t> seeds, std::optional<unsigned> threads) {
            ExperimentConfig cfg = load_config(config);
            if (seeds) cfg.seeds = *seeds;
            if (threads) cfg.threads = *threads;
            SweepResult res;
            {
                py::gil_scoped_release release;
                res = run_sweep(cfg);
            }
            py::list rows;
            for (const auto& r : res.rows) {
                py::dict d;
                d["estimator"] = r.estimator;
                d["n"] = r.n;
                d["seed"] = r.seed;
                d["estimate"] = r.estimate;
                d["truth"] = r.truth;
                d["sq_err"] = r.sq_err;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config"), py::arg("seeds") = py::none(), py::arg("threads") = py::none());
}
