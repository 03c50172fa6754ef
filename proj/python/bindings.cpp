#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <memory>

#include "autotune/acquisition.hpp"
#include "autotune/analysis.hpp"
#include "autotune/benchfn.hpp"
#include "autotune/design.hpp"
#include "autotune/errors.hpp"
#include "autotune/experiment.hpp"
#include "autotune/gp.hpp"
#include "autotune/tuner.hpp"

namespace py = pybind11;
using namespace autotune;

namespace {

ConfigPoint to_point(const std::vector<std::size_t>& coords) { return ConfigPoint{coords}; }

std::vector<ConfigPoint> to_points(const std::vector<std::vector<std::size_t>>& rows) {
    std::vector<ConfigPoint> out;
    for (const auto& r : rows) {
        out.push_back(to_point(r));
    }
    return out;
}

py::dict hyper_dict(const Hyperparams& h) {
    py::dict d;
    d["kernel"] = to_string(h.kernel.family);
    d["amplitude"] = h.kernel.amplitude;
    d["scales"] = h.kernel.scales;
    d["mean"] = to_string(h.mean.form);
    d["mean_offset"] = h.mean.offset;
    d["mean_slopes"] = h.mean.slopes;
    d["noise_variance"] = h.noise_variance;
    return d;
}

Hyperparams make_hyper(const std::string& kernel, double amplitude, std::vector<double> scales, double noise,
                       const std::string& mean, double offset, std::vector<double> slopes) {
    Hyperparams h;
    h.kernel = {parse_kernel(kernel), amplitude, std::move(scales)};
    h.noise_variance = noise;
    h.mean.form = parse_mean(mean);
    h.mean.offset = offset;
    h.mean.slopes = std::move(slopes);
    return h;
}

ObservationSet make_obs(const std::vector<std::vector<std::size_t>>& points, const std::vector<double>& y) {
    if (points.size() != y.size()) {
        throw ContractViolation("points and y differ in length");
    }
    ObservationSet obs;
    for (std::size_t i = 0; i < y.size(); ++i) {
        obs.add(to_point(points[i]), y[i]);
    }
    return obs;
}

py::dict trace_dict(const ConfigSpace& space, const RunTrace& t) {
    py::list records;
    for (const auto& r : t.records) {
        py::dict d;
        d["t"] = r.t;
        d["point"] = r.point.coords;
        d["index"] = space.linear_index(r.point);
        d["y"] = r.y;
        d["kappa"] = r.kappa;
        d["best"] = r.best;
        d["overhead_ms"] = r.overhead_ms;
        records.append(d);
    }
    py::dict out;
    out["algorithm"] = t.algorithm;
    out["seed"] = t.seed;
    out["records"] = records;
    out["best_y"] = t.best_y;
    out["best_point"] = t.best_point.coords;
    out["failures"] = t.failures;
    out["hyperparameters"] = t.hyper ? py::object(hyper_dict(*t.hyper)) : py::object(py::none());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gaussian-process configuration tuning over finite grids.";

    static py::exception<Error> base(m, "AutotuneError");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ConditioningError>(m, "ConditioningError", base.ptr());
    py::register_exception<InfeasibleDesignError>(m, "InfeasibleDesignError", base.ptr());
    py::register_exception<ScheduleError>(m, "ScheduleError", base.ptr());

    py::class_<ParameterDef>(m, "Parameter")
        .def_static("numeric", &ParameterDef::numeric, py::arg("name"), py::arg("values"))
        .def_static("categorical", &ParameterDef::categorical, py::arg("name"), py::arg("labels"))
        .def_property_readonly("name", &ParameterDef::name)
        .def_property_readonly("labels", &ParameterDef::labels)
        .def("__len__", &ParameterDef::size);

    py::class_<ConfigSpace>(m, "Space")
        .def(py::init<std::vector<ParameterDef>>(), py::arg("parameters"))
        .def_property_readonly("dims", &ConfigSpace::dims)
        .def("__len__", &ConfigSpace::size)
        .def("linear_index", [](const ConfigSpace& s, const std::vector<std::size_t>& x) { return s.linear_index(to_point(x)); })
        .def("point_at", [](const ConfigSpace& s, std::size_t i) { return s.point_at(i).coords; })
        .def("neighborhood",
             [](const ConfigSpace& s, const std::vector<std::size_t>& x, std::size_t radius) {
                 std::vector<std::vector<std::size_t>> out;
                 for (const auto& p : s.neighborhood(to_point(x), radius)) {
                     out.push_back(p.coords);
                 }
                 return out;
             })
        .def("values", [](const ConfigSpace& s, const std::vector<std::size_t>& x) { return s.values(to_point(x)); })
        .def("describe", [](const ConfigSpace& s, const std::vector<std::size_t>& x) { return s.describe(to_point(x)); });

    m.def(
        "lhd_sample",
        [](const ConfigSpace& space, std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            std::vector<std::vector<std::size_t>> out;
            for (const auto& p : lhd_sample(space, n, rng).points) {
                out.push_back(p.coords);
            }
            return out;
        },
        py::arg("space"), py::arg("n"), py::arg("seed") = 0);

    py::class_<GpModel>(m, "GpModel")
        .def_static(
            "fit",
            [](const ConfigSpace& space, const std::vector<std::vector<std::size_t>>& points,
               const std::vector<double>& y, const std::string& kernel, double amplitude, std::vector<double> scales,
               double noise, const std::string& mean, double offset, std::vector<double> slopes) {
                auto features = std::make_shared<const FeatureMap>(space);
                return GpModel::fit(features, make_obs(points, y),
                                    make_hyper(kernel, amplitude, std::move(scales), noise, mean, offset,
                                               std::move(slopes)));
            },
            py::arg("space"), py::arg("points"), py::arg("y"), py::arg("kernel") = "matern",
            py::arg("amplitude") = 1.0, py::arg("scales"), py::arg("noise_variance") = 0.0,
            py::arg("mean") = "const", py::arg("offset") = 0.0, py::arg("slopes") = std::vector<double>{})
        .def("predict",
             [](const GpModel& g, const std::vector<std::size_t>& x) {
                 const auto p = g.predict(to_point(x));
                 return py::make_tuple(p.mean, p.variance);
             })
        .def("refit_with", [](const GpModel& g, const std::vector<std::size_t>& x, double y) { return g.refit_with(to_point(x), y); })
        .def("log_marginal_likelihood", &GpModel::log_marginal_likelihood)
        .def_property_readonly("jitter", &GpModel::jitter)
        .def_property_readonly("hyperparameters", [](const GpModel& g) { return hyper_dict(g.hyper()); })
        .def("__len__", &GpModel::size);

    m.def(
        "learn_hyperparameters",
        [](const ConfigSpace& space, const std::vector<std::vector<std::size_t>>& points, const std::vector<double>& y,
           const std::string& kernel, const std::string& mean, int restarts, std::uint64_t seed) {
            auto features = std::make_shared<const FeatureMap>(space);
            const auto obs = make_obs(points, y);
            const auto init = default_hyperparams(*features, obs, parse_kernel(kernel), parse_mean(mean));
            Rng rng(seed);
            return hyper_dict(learn_hyperparams(features, obs, init, restarts, rng));
        },
        py::arg("space"), py::arg("points"), py::arg("y"), py::arg("kernel") = "product", py::arg("mean") = "const",
        py::arg("restarts") = 3, py::arg("seed") = 0);

    m.def("riemann_zeta", &riemann_zeta, py::arg("r"));
    m.def(
        "kappa",
        [](std::size_t t, std::size_t space_size, double epsilon, int r) {
            return kappa_at(KappaSchedule::adaptive(epsilon, r, space_size), t);
        },
        py::arg("t"), py::arg("space_size"), py::arg("epsilon") = 0.1, py::arg("r") = 2);

    m.def("branin", &branin, py::arg("x1"), py::arg("x2"));
    m.def("hartmann3", [](const std::vector<double>& x) { return hartmann3(x); }, py::arg("x"));
    m.def("rosenbrock", [](const std::vector<double>& x) { return rosenbrock(x); }, py::arg("x"));
    m.def("dixon2", &dixon2, py::arg("x1"), py::arg("x2"));

    m.def(
        "tune",
        [](const std::string& function, std::vector<std::size_t> grid, const std::string& algorithm,
           std::size_t budget, std::optional<std::size_t> init_design, const std::string& kappa, double noise,
           std::uint64_t seed) {
            ExperimentSpec spec;
            spec.function = function;
            spec.grid = std::move(grid);
            spec.algorithms = {algorithm};
            spec.budget = budget;
            spec.init_design = init_design;
            spec.kappa = kappa;
            spec.noise = std::to_string(noise);
            spec.seed = seed;
            spec.validate();
            const auto problem = build_problem(spec);
            RunTrace trace;
            {
                py::gil_scoped_release release;
                trace = run_algorithm(algorithm, spec, problem, seed);
            }
            py::dict out = trace_dict(problem.space, trace);
            out["ground_truth"] = problem.truth->minimum;
            out["space_size"] = problem.space.size();
            return out;
        },
        py::arg("function") = "branin", py::arg("grid") = std::vector<std::size_t>{},
        py::arg("algorithm") = "bo4co", py::arg("budget") = 100, py::arg("init_design") = py::none(),
        py::arg("kappa") = "adaptive:0.1,2", py::arg("noise") = 0.0, py::arg("seed") = 0);

    m.def(
        "merit",
        [](const ConfigSpace& space, const std::vector<std::vector<std::size_t>>& points,
           const std::vector<double>& latency, std::vector<std::size_t> subset) {
            TabularDataset data(space);
            for (std::size_t i = 0; i < points.size(); ++i) {
                data.add_measurement(to_point(points.at(i)), latency.at(i));
            }
            const auto r = merit(data, std::move(subset));
            py::dict d;
            d["subset"] = r.subset;
            d["merit"] = r.merit;
            d["correlations"] = r.correlations;
            d["mean_label_correlation"] = r.mean_label_correlation;
            d["mean_inter_correlation"] = r.mean_inter_correlation;
            return d;
        },
        py::arg("space"), py::arg("points"), py::arg("latency"), py::arg("subset"));

    m.def(
        "snr",
        [](const std::vector<double>& samples) {
            const auto r = snr_row("", samples);
            py::dict d;
            d["samples"] = r.samples;
            d["mean"] = r.mean;
            d["sigma"] = r.sigma;
            d["ratio"] = r.ratio;
            d["mean_ci"] = r.mean_ci;
            d["sigma_ci"] = r.sigma_ci;
            return d;
        },
        py::arg("samples"));
}
