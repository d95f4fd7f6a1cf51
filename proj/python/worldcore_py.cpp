// Python bindings. Structured values cross the boundary as JSON text; the package
// __init__ decodes them into plain dicts and lists.

#include "worldcore/agents.hpp"
#include "worldcore/error.hpp"
#include "worldcore/gateway.hpp"
#include "worldcore/scenario.hpp"
#include "worldcore/sml.hpp"
#include "worldcore/state.hpp"
#include "worldcore/worldscope.hpp"

#include <json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using nlohmann::json;
using namespace worldcore;

namespace {

Bindings args_from_text(const std::string& text) {
    const json doc = parse_json_text(text);
    if (!doc.is_object()) {
        fail(ErrorClass::ParseError, "args", "expected an object");
    }
    Bindings args;
    for (const auto& [name, value] : doc.items()) {
        auto scalar = scalar_from_json(value);
        if (!scalar) {
            fail(ErrorClass::ParseError, "args." + name, "expected a scalar");
        }
        args.emplace(name, *scalar);
    }
    return args;
}

std::vector<Transaction> transactions(const std::vector<LogRecord>& records) {
    std::vector<Transaction> txns;
    txns.reserve(records.size());
    for (const auto& r : records) {
        txns.push_back(r.txn);
    }
    return txns;
}

class PyKernel {
public:
    explicit PyKernel(const std::string& scenario_path)
        : kernel_(std::make_unique<Kernel>(load_scenario_file(scenario_path))) {}

    std::uint64_t version() const { return kernel_->version(); }
    std::string state_hash() const { return worldcore::state_hash(*kernel_->state()); }
    std::string state_json() const { return canonical_json(*kernel_->state()); }

    std::string perceive(const std::string& agent) const {
        return snapshot_to_json(worldcore::perceive(*kernel_, agent)).dump();
    }

    std::string act(const std::string& agent, const std::string& tool, const std::string& args) {
        const Bindings bound = args_from_text(args);
        TransactionResult r;
        {
            py::gil_scoped_release release;
            r = worldcore::act(*kernel_, agent, tool, bound);
        }
        return json{{"committed", true}, {"version", r.version}, {"seq", r.txn.seq},
                    {"delta", transaction_to_json(r.txn)["delta"]}}
            .dump();
    }

    std::string rules(const std::string& agent) const {
        return rules_to_json(query_knowledge(*kernel_, agent), kernel_->scenario().terminology).dump();
    }

    std::string manifest(const std::string& role) const {
        return gateway::export_tool_manifest(kernel_->scenario(), role).dump();
    }

    std::string run(int steps, std::uint64_t seed) {
        RunReport report;
        {
            py::gil_scoped_release release;
            report = run_loop(*kernel_, steps, seed);
        }
        return run_report_to_json(report, kernel_->scenario().terminology).dump();
    }

    std::string log_jsonl() const { return log_to_jsonl(kernel_->log()); }

private:
    std::unique_ptr<Kernel> kernel_;
};

std::string validate(const std::string& path) {
    const Scenario sc = load_scenario_file(path);
    std::vector<std::string> agents;
    for (const auto& a : sc.agents) {
        agents.push_back(a.id);
    }
    std::vector<std::string> roles;
    for (const auto& [name, role] : sc.roles) {
        roles.push_back(name);
    }
    return json{{"name", sc.schema.name},
                {"entityTypes", sc.schema.entity_types.size()},
                {"actions", sc.schema.actions.size()},
                {"features", sc.terminology.size()},
                {"roles", roles},
                {"agents", agents}}
        .dump();
}

std::string replay_log(const std::string& scenario_path, const std::string& log_text) {
    const Scenario sc = load_scenario_file(scenario_path);
    const auto records = log_from_jsonl(log_text);
    const std::string hash = state_hash(replay(sc.schema, sc.init, transactions(records)));
    audit_log(sc, records);
    return hash;
}

std::string learn(const std::string& scenario_path, const std::string& log_text, double theta) {
    const Scenario sc = load_scenario_file(scenario_path);
    std::vector<Case> cases;
    for (const auto& r : log_from_jsonl(log_text)) {
        cases.push_back(case_from_names(r.txn.seq, r.case_features, sc.terminology));
    }
    LearnerConfig config = sc.learner;
    config.theta = theta;
    const RuleStore kb = batch_learn(cases, config, sc.terminology);
    return rules_to_json(knowledge_view(kb, config), sc.terminology).dump();
}

std::string assess(const std::string& profile_json) {
    const auto profile = worldscope::profile_from_json(parse_json_text(profile_json));
    return worldscope::report_to_json(worldscope::assess_applicability(profile)).dump();
}

}  // namespace

PYBIND11_MODULE(_worldcore, m) {
    m.doc() = "worldcore engine bindings";

    static PyObject* error_type = PyErr_NewException("worldcore._worldcore.WorldcoreError", PyExc_RuntimeError, nullptr);
    m.attr("WorldcoreError") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(py::str(e.what()));
            exc.attr("error_class") = py::str(std::string(to_string(e.error_class())));
            exc.attr("location") = py::str(e.location());
            exc.attr("reason") = py::str(e.reason());
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    m.def("validate", &validate, py::arg("path"));
    m.def("replay_log", &replay_log, py::arg("scenario_path"), py::arg("log_text"));
    m.def("learn", &learn, py::arg("scenario_path"), py::arg("log_text"), py::arg("theta"));
    m.def("assess", &assess, py::arg("profile_json"));

    py::class_<PyKernel>(m, "Kernel")
        .def(py::init<const std::string&>(), py::arg("scenario_path"))
        .def_property_readonly("version", &PyKernel::version)
        .def("state_hash", &PyKernel::state_hash)
        .def("state_json", &PyKernel::state_json)
        .def("perceive", &PyKernel::perceive, py::arg("agent"))
        .def("act", &PyKernel::act, py::arg("agent"), py::arg("tool"), py::arg("args"))
        .def("rules", &PyKernel::rules, py::arg("agent"))
        .def("manifest", &PyKernel::manifest, py::arg("role"))
        .def("run", &PyKernel::run, py::arg("steps"), py::arg("seed"))
        .def("log_jsonl", &PyKernel::log_jsonl);
}
