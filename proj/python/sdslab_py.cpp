#include "sds/asymptotics.hpp"
#include "sds/conformal.hpp"
#include "sds/energy.hpp"
#include "sds/errors.hpp"
#include "sds/evolution.hpp"
#include "sds/geometry.hpp"
#include "sds/scattering.hpp"
#include "sds/spectral.hpp"

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

// JSON crosses the boundary as Python objects through the json module.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict extraction_dict(const sds::ExtractionResult& e) {
    return py::dict("psi0"_a = e.psi0, "psi2"_a = e.psi2, "psi3"_a = e.psi3, "spurious_inv_r"_a = e.spurious_inv_r,
                    "spurious_log"_a = e.spurious_log, "fit_radii"_a = e.fit_radii, "condition"_a = e.condition);
}

}  // namespace

PYBIND11_MODULE(sdslab, m) {
    m.doc() = "Wave scattering on the expanding region of Schwarzschild-de Sitter";

    static py::exception<sds::Error> error(m, "SdsError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const sds::Error& e) {
            py::set_error(error, ("[" + e.module() + "] " + e.kind() + ": " + e.what()).c_str());
        }
    });

    py::class_<sds::SdSGeometry>(m, "Geometry")
        .def(py::init(&sds::build_geometry), "lambda_"_a, "mass"_a)
        .def_readonly("lambda_", &sds::SdSGeometry::lambda)
        .def_readonly("mass", &sds::SdSGeometry::mass)
        .def_readonly("r_h", &sds::SdSGeometry::r_h)
        .def_readonly("r_c", &sds::SdSGeometry::r_c)
        .def_readonly("r_bar", &sds::SdSGeometry::r_bar)
        .def_readonly("kappa_c", &sds::SdSGeometry::kappa_c)
        .def_readonly("alpha_h", &sds::SdSGeometry::alpha_h)
        .def_readonly("alpha_bar_c", &sds::SdSGeometry::alpha_bar_c)
        .def("delta", &sds::SdSGeometry::delta)
        .def("delta_prime", &sds::SdSGeometry::delta_prime)
        .def("surface_gravity_at", [](const sds::SdSGeometry& g, double root) { return sds::surface_gravity_at(g, root); })
        .def("__repr__", [](const sds::SdSGeometry& g) {
            return "Geometry(lambda_=" + std::to_string(g.lambda) + ", mass=" + std::to_string(g.mass) + ")";
        });
    m.def("surface_gravity", &sds::surface_gravity);
    m.def("kruskal_exponents", &sds::kruskal_exponents);

    py::class_<sds::Band>(m, "Band")
        .def(py::init([](double period, int max_k, int max_ell) { return sds::Band{period, max_k, max_ell}; }),
             "period"_a = 2.0 * 3.14159265358979323846, "max_k"_a = 8, "max_ell"_a = 8)
        .def_readwrite("period", &sds::Band::period)
        .def_readwrite("max_k", &sds::Band::max_k)
        .def_readwrite("max_ell", &sds::Band::max_ell)
        .def("__len__", &sds::Band::size)
        .def("index", &sds::Band::index)
        .def("mode", [](const sds::Band& b, std::size_t i) {
            const auto mi = b.mode(i);
            return py::make_tuple(mi.k, mi.ell, mi.em);
        })
        .def("omega", &sds::Band::omega)
        .def(py::self == py::self);

    py::class_<sds::CylinderField>(m, "Field")
        .def(py::init<const sds::Band&, bool>(), "band"_a, "real"_a = true)
        .def_property_readonly("band", &sds::CylinderField::band)
        .def_property_readonly("real", &sds::CylinderField::real_flag)
        .def("__len__", &sds::CylinderField::size)
        .def("__getitem__", [](const sds::CylinderField& f, std::tuple<int, int, int> kle) {
            auto [k, l, e] = kle;
            if (!f.band().contains(k, l, e)) throw py::index_error("mode outside the band");
            return f.at(k, l, e);
        })
        .def("__setitem__", [](sds::CylinderField& f, std::tuple<int, int, int> kle, sds::cplx v) {
            auto [k, l, e] = kle;
            if (!f.band().contains(k, l, e)) throw py::index_error("mode outside the band");
            f.at(k, l, e) = v;
        })
        .def_property("coeffs", [](const sds::CylinderField& f) { return f.coeffs(); },
                      [](sds::CylinderField& f, const std::vector<sds::cplx>& c) {
                          if (c.size() != f.size()) throw sds::BandMismatch("cylinder_spectral", "coefficient count differs from the band");
                          f.coeffs() = c;
                      })
        .def("evaluate", [](const sds::CylinderField& f, double t, double th, double ph) { return sds::evaluate(f, t, th, ph); })
        .def("sobolev_norm", [](const sds::CylinderField& f, int s) { return sds::sobolev_norm(f, s); }, "s"_a = 0)
        .def("reality_defect", &sds::CylinderField::reality_defect)
        .def("to_json", [](const sds::CylinderField& f) { return to_py(sds::to_json(f)); })
        .def_static("from_json", [](const py::object& o) { return sds::field_from_json(from_py(o)); })
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def("__mul__", [](const sds::CylinderField& f, sds::cplx a) { return a * f; })
        .def("__rmul__", [](const sds::CylinderField& f, sds::cplx a) { return a * f; });
    m.def("random_field", &sds::random_field, "band"_a, "seed"_a, "decay"_a = 1.5, "real"_a = true);

    py::enum_<sds::Variable>(m, "Variable")
        .value("radius", sds::Variable::radius)
        .value("inverse_radius", sds::Variable::inverse_radius);

    py::class_<sds::IntegratorConfig>(m, "IntegratorConfig")
        .def(py::init<>())
        .def_readwrite("rel_tol", &sds::IntegratorConfig::rel_tol)
        .def_readwrite("abs_tol", &sds::IntegratorConfig::abs_tol)
        .def_readwrite("variable", &sds::IntegratorConfig::variable)
        .def_readwrite("switch_radius", &sds::IntegratorConfig::switch_radius)
        .def_readwrite("max_steps", &sds::IntegratorConfig::max_steps)
        .def_readwrite("threads", &sds::IntegratorConfig::threads);

    py::class_<sds::FieldState>(m, "FieldState")
        .def(py::init<double, const sds::Band&, bool>(), "r"_a, "band"_a, "real"_a = true)
        .def_readwrite("r", &sds::FieldState::r)
        .def_readonly("band", &sds::FieldState::band)
        .def_readwrite("real", &sds::FieldState::real_flag)
        .def_readwrite("u", &sds::FieldState::u)
        .def_readwrite("du", &sds::FieldState::du);
    m.def("field_state_csv", &sds::field_state_csv);

    m.def("psi2_factor", &sds::psi2_factor, "omega"_a, "ell"_a, "lambda_"_a);
    m.def("residual_norm", [](const sds::CylinderField& psi0, const sds::CylinderField& psi3, const sds::SdSGeometry& g,
                              double r) { return sds::residual(sds::build_asymptotic(psi0, psi3, g), r).weighted_norm; });

    m.def("evolve_field", [](const sds::SdSGeometry& g, const sds::FieldState& fs, double r,
                             const sds::IntegratorConfig& cfg) { return sds::evolve_field(g, fs, r, nullptr, cfg); },
          "geometry"_a, "state"_a, "r_target"_a, "config"_a = sds::IntegratorConfig{});
    m.def("forward_solve", &sds::forward_solve, "initial"_a, "geometry"_a, "radii"_a,
          "config"_a = sds::IntegratorConfig{});
    m.def("geometric_radii", &sds::geometric_radii);

    m.def("flux", [](const sds::FieldState& fs, const sds::SdSGeometry& g, const std::string& mult) {
        if (mult != "DR" && mult != "M") throw sds::InvalidArgument("energy", "multiplier must be DR or M");
        return sds::flux(fs, g, mult == "DR" ? sds::MultiplierKind::DR : sds::MultiplierKind::M);
    }, "state"_a, "geometry"_a, "multiplier"_a = "M");
    m.def("sobolev_ratio", &sds::sobolev_ratio);
    m.def("monotonicity_report", [](const std::vector<sds::FieldState>& traj, const sds::SdSGeometry& g, double slack,
                                    double bound) {
        const auto rep = sds::monotonicity_report(traj, g, slack, bound);
        return py::make_tuple(to_py(rep.verdict_json()), sds::ledger_csv(rep.ledger));
    }, "trajectory"_a, "geometry"_a, "slack"_a = 1e-11, "bound"_a = 10.0);

    py::class_<sds::ExtractionOptions>(m, "ExtractionOptions")
        .def(py::init<>())
        .def_readwrite("nuisance_terms", &sds::ExtractionOptions::nuisance_terms)
        .def_readwrite("use_derivative", &sds::ExtractionOptions::use_derivative)
        .def_readwrite("max_condition", &sds::ExtractionOptions::max_condition);
    m.def("extract_asymptotics", [](const std::vector<sds::FieldState>& traj, const std::vector<double>& fit_radii,
                                    const sds::SdSGeometry& g, const sds::ExtractionOptions& opt) {
        return extraction_dict(sds::extract_asymptotics(traj, fit_radii, g, opt));
    }, "trajectory"_a, "fit_radii"_a, "geometry"_a, "options"_a = sds::ExtractionOptions{});

    m.def("solve_backward", [](const sds::CylinderField& psi0, const sds::CylinderField& psi3, const sds::SdSGeometry& g,
                               double r0, const std::vector<double>& schedule, const sds::IntegratorConfig& cfg) {
        const auto res = sds::solve_backward({psi0, psi3}, g, r0, schedule, cfg);
        return py::dict("state"_a = res.field_at_r0, "schedule"_a = res.schedule, "cauchy_gaps"_a = res.cauchy_gaps,
                        "rate_fit"_a = res.rate_fit);
    }, "psi0"_a, "psi3"_a, "geometry"_a, "r0"_a, "schedule"_a, "config"_a = sds::IntegratorConfig{});
    m.def("round_trip", [](const sds::CylinderField& psi0, const sds::CylinderField& psi3, const sds::SdSGeometry& g,
                           double r0, double r_max, const sds::IntegratorConfig& cfg) {
        return to_py(sds::round_trip({psi0, psi3}, g, r0, r_max, cfg).to_json());
    }, "psi0"_a, "psi3"_a, "geometry"_a, "r0"_a, "r_max"_a, "config"_a = sds::IntegratorConfig{});

    py::class_<sds::MetricModel, std::shared_ptr<sds::MetricModel>>(m, "MetricModel")
        .def_property_readonly("kind", &sds::MetricModel::kind)
        .def_property_readonly("lambda_", &sds::MetricModel::lambda)
        .def_property_readonly("class_tag", [](const sds::MetricModel& mm) { return sds::to_string(mm.class_tag()); })
        .def("to_json", [](const sds::MetricModel& mm) { return to_py(mm.to_json()); });
    auto unconst = [](sds::ModelPtr p) { return std::const_pointer_cast<sds::MetricModel>(p); };
    m.def("model_from_json", [unconst](const py::object& o) { return unconst(sds::model_from_json(from_py(o))); });
    m.def("sds_in_rho", [unconst](const sds::SdSGeometry& g) { return unconst(sds::sds_in_rho(g)); });
    m.def("synthetic_g1", [unconst](double lambda, double eps) { return unconst(sds::synthetic_g1(lambda, eps)); },
          "lambda_"_a, "epsilon"_a = 0.1);
    m.def("conformal_asymptotics", [](const sds::CylinderField& psi0, const sds::CylinderField& psi3,
                                      const std::shared_ptr<sds::MetricModel>& model) {
        const auto a = sds::build_asymptotic_conformal(psi0, psi3, model);
        return py::dict("psi2"_a = a.psi2, "psi31"_a = a.psi31);
    });
    m.def("conformal_residual_order", [](const sds::CylinderField& psi0, const sds::CylinderField& psi3,
                                         const std::shared_ptr<sds::MetricModel>& model, const std::vector<double>& rhos) {
        const auto r = sds::conformal_residual_order(sds::build_asymptotic_conformal(psi0, psi3, model), rhos);
        return py::dict("norms"_a = r.norms, "power_slope"_a = r.power_slope, "log_slope"_a = r.log_slope,
                        "log_detected"_a = r.log_detected);
    });
    m.def("weighted_backward_check", [](const std::shared_ptr<sds::MetricModel>& model, const sds::CylinderField& psi0,
                                        const sds::CylinderField& psi3, double rho0, const std::vector<double>& cutoffs,
                                        const sds::IntegratorConfig& cfg) {
        return to_py(sds::weighted_backward_check(model, psi0, psi3, rho0, cutoffs, cfg).to_json());
    }, "model"_a, "psi0"_a, "psi3"_a, "rho0"_a, "cutoffs"_a, "config"_a = sds::IntegratorConfig{});
}
