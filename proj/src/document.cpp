#include "releq/document.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace releq {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw DocumentError(field + ": " + what);
}

double number_at(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(field, "expected a finite number");
    return v;
}

std::vector<double> number_array(const json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(number_at(j[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

const std::set<std::string> kKnownFields = {"schema_version", "dimension", "exponent", "masses",
                                            "frequencies",    "positions", "metadata"};

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

// Non-finite values have no JSON representation.
json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

ProblemDocument parse_document(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw DocumentError(std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("<root>", "expected a JSON object");
    for (const auto& [key, value] : root.items()) {
        if (!kKnownFields.contains(key)) fail(key, "unknown field");
    }

    ProblemDocument doc;
    if (root.contains("schema_version")) {
        if (!root["schema_version"].is_string()) fail("schema_version", "expected a string");
        doc.schema_version = root["schema_version"].get<std::string>();
        if (doc.schema_version != kSchemaVersion) {
            fail("schema_version", "unsupported version \"" + doc.schema_version + "\"");
        }
    }

    if (!root.contains("dimension")) fail("dimension", "missing");
    if (!root["dimension"].is_number_integer()) fail("dimension", "expected an integer");
    doc.dimension = root["dimension"].get<int>();
    if (doc.dimension < 2) fail("dimension", "must be at least 2");

    if (!root.contains("exponent")) fail("exponent", "missing");
    doc.exponent = number_at(root["exponent"], "exponent");
    if (!(doc.exponent < -0.5)) {
        fail("exponent", "a = " + json(doc.exponent).dump() + " violates the domain a < -1/2");
    }

    if (!root.contains("masses")) fail("masses", "missing");
    doc.masses = number_array(root["masses"], "masses");
    if (doc.masses.size() < 2) fail("masses", "at least two bodies are required");
    for (std::size_t i = 0; i < doc.masses.size(); ++i) {
        if (!(doc.masses[i] > 0.0)) fail("masses[" + std::to_string(i) + "]", "must be positive");
    }

    if (!root.contains("frequencies")) fail("frequencies", "missing");
    doc.frequencies = number_array(root["frequencies"], "frequencies");
    if (doc.frequencies.size() != static_cast<std::size_t>(doc.dimension / 2)) {
        fail("frequencies", "expected floor(dimension/2) = " + std::to_string(doc.dimension / 2) +
                                " entries, got " + std::to_string(doc.frequencies.size()));
    }
    for (std::size_t l = 0; l < doc.frequencies.size(); ++l) {
        if (!(doc.frequencies[l] > 0.0)) {
            fail("frequencies[" + std::to_string(l) + "]", "must be positive");
        }
    }

    if (root.contains("positions") && !root["positions"].is_null()) {
        const json& pos = root["positions"];
        if (!pos.is_array()) fail("positions", "expected an array of points");
        if (pos.size() != doc.masses.size()) {
            fail("positions", "expected " + std::to_string(doc.masses.size()) + " points, got " +
                                  std::to_string(pos.size()));
        }
        std::vector<std::vector<double>> pts;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const std::string field = "positions[" + std::to_string(i) + "]";
            auto p = number_array(pos[i], field);
            if (p.size() != static_cast<std::size_t>(doc.dimension)) {
                fail(field, "expected " + std::to_string(doc.dimension) + " coordinates");
            }
            pts.push_back(std::move(p));
        }
        doc.positions = std::move(pts);
        try {
            (void)doc.configuration();
        } catch (const SingularityError& e) {
            fail("positions", e.what());
        }
    }

    if (root.contains("metadata")) {
        const json& meta = root["metadata"];
        if (!meta.is_object()) fail("metadata", "expected an object of strings");
        for (const auto& [key, value] : meta.items()) {
            if (!value.is_string()) fail("metadata." + key, "expected a string");
            doc.metadata[key] = value.get<std::string>();
        }
    }
    return doc;
}

ProblemDocument read_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path.string());
    return parse_document(buf.str());
}

std::string write_document(const ProblemDocument& doc) {
    json root;
    root["schema_version"] = doc.schema_version;
    root["dimension"] = doc.dimension;
    root["exponent"] = doc.exponent;
    root["masses"] = doc.masses;
    root["frequencies"] = doc.frequencies;
    if (doc.positions) root["positions"] = *doc.positions;
    root["metadata"] = doc.metadata;
    return root.dump(2) + "\n";
}

Problem ProblemDocument::problem() const {
    return Problem(dimension, masses, frequencies, Exponent(exponent));
}

Configuration ProblemDocument::configuration() const {
    if (!positions) throw DocumentError("positions: missing");
    std::vector<Vector> pts;
    pts.reserve(positions->size());
    for (const auto& p : *positions) pts.emplace_back(Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())));
    return Configuration(std::move(pts));
}

ProblemDocument ProblemDocument::from(const Problem& problem,
                                      const std::optional<Configuration>& config) {
    ProblemDocument doc;
    doc.dimension = problem.dimension();
    doc.exponent = problem.exponent();
    doc.masses = problem.masses();
    doc.frequencies = problem.frequencies();
    if (config) {
        std::vector<std::vector<double>> pts;
        for (const auto& p : config->points()) pts.emplace_back(p.data(), p.data() + p.size());
        doc.positions = std::move(pts);
    }
    return doc;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

json to_json(const Vector& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Configuration& config) {
    json out = json::array();
    for (const auto& p : config.points()) out.push_back(to_json(p));
    return out;
}

json to_json(const ResidualReport& report) {
    json per_body = json::array();
    for (const auto& f : report.per_body) per_body.push_back(to_json(f));
    return {{"per_body", per_body},
            {"max_norm", report.max_norm},
            {"rms", report.rms},
            {"scale", report.scale}};
}

json to_json(const ClusterDiagnostics& diag) {
    return {{"l", diag.cluster_size},
            {"lhs", to_json(diag.lhs)},
            {"rhs", to_json(diag.rhs)},
            {"gap", diag.gap}};
}

json to_json(const SolveResult& result) {
    return {{"config", to_json(result.config)},
            {"residual_max", result.residual_max},
            {"residual_scale", result.residual_scale},
            {"tolerance", result.tolerance},
            {"iterations", result.iterations},
            {"termination", std::string(to_string(result.termination))},
            {"trace", result.trace}};
}

json to_json(const EquilibriumFingerprint& fp) {
    return {{"sorted_distances", fp.sorted_distances},
            {"sorted_mass_weighted_norms", fp.sorted_mass_weighted_norms},
            {"norm_masses", fp.norm_masses}};
}

json to_json(const MultistartResult& search) {
    json classes = json::array();
    for (const auto& c : search.classes) {
        json entry = to_json(c.result);
        entry["fingerprint"] = to_json(c.fingerprint);
        entry["first_trial"] = c.first_trial;
        entry["multiplicity"] = c.multiplicity;
        classes.push_back(std::move(entry));
    }
    return classes;
}

json to_json(const ContinuationResult& continuation) {
    json steps = json::array();
    for (const auto& s : continuation.steps) {
        json entry = to_json(s.result);
        entry["exponent"] = s.exponent;
        steps.push_back(std::move(entry));
    }
    json out = {{"steps", steps},
                {"completed", continuation.completed},
                {"last_good_exponent", continuation.last_good_exponent}};
    if (!continuation.failure.empty()) out["failure"] = continuation.failure;
    return out;
}

json to_json(const ProbeReport& report) {
    json per_class = json::array();
    for (const auto& c : report.per_class) {
        per_class.push_back({{"min_pairwise_distance", c.min_pairwise_distance},
                             {"max_point_norm", c.max_point_norm},
                             {"residual_max", c.residual_max},
                             {"multiplicity", c.multiplicity},
                             {"first_trial", c.first_trial}});
    }
    return {{"problem",
             {{"dimension", report.dimension},
              {"body_count", report.body_count},
              {"exponent", report.exponent},
              {"masses", report.masses},
              {"frequencies", report.frequencies}}},
            {"omega_scale", report.omega_scale},
            {"rng_seed", report.rng_seed},
            {"classes_found", report.classes_found},
            {"min_pairwise_distance", finite_or_null(report.min_pairwise_distance)},
            {"max_point_norm", finite_or_null(report.max_point_norm)},
            {"per_class", per_class},
            {"trials", report.trials},
            {"converged", report.converged},
            {"dropped", report.dropped}};
}

void write_fingerprints_csv(std::ostream& out, const MultistartResult& search) {
    out << "class,first_trial,multiplicity";
    if (!search.classes.empty()) {
        const auto& fp = search.classes.front().fingerprint;
        for (std::size_t i = 0; i < fp.sorted_distances.size(); ++i) out << ",d" << i;
        for (std::size_t i = 0; i < fp.sorted_mass_weighted_norms.size(); ++i) out << ",w" << i;
        for (std::size_t i = 0; i < fp.norm_masses.size(); ++i) out << ",m" << i;
    }
    out << '\n';
    for (std::size_t c = 0; c < search.classes.size(); ++c) {
        const auto& cls = search.classes[c];
        out << c << ',' << cls.first_trial << ',' << cls.multiplicity;
        for (double d : cls.fingerprint.sorted_distances) out << ',' << format_double(d);
        for (double w : cls.fingerprint.sorted_mass_weighted_norms) out << ',' << format_double(w);
        for (double m : cls.fingerprint.norm_masses) out << ',' << format_double(m);
        out << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<ProbeReport>& reports) {
    out << "omega_scale,classes_found,c_hat,C_hat,trials,converged\n";
    for (const auto& r : reports) {
        out << format_double(r.omega_scale) << ',' << r.classes_found << ','
            << format_double(r.min_pairwise_distance) << ',' << format_double(r.max_point_norm)
            << ',' << r.trials << ',' << r.converged << '\n';
    }
}

void write_continuation_csv(std::ostream& out, const ContinuationResult& continuation) {
    out << "step,exponent,termination,residual_max,iterations,min_distance,max_distance,max_norm\n";
    for (std::size_t s = 0; s < continuation.steps.size(); ++s) {
        const auto& step = continuation.steps[s];
        const auto& cfg = step.result.config;
        out << s + 1 << ',' << format_double(step.exponent) << ','
            << to_string(step.result.termination) << ',' << format_double(step.result.residual_max)
            << ',' << step.result.iterations << ',' << format_double(cfg.min_distance()) << ','
            << format_double(max_pairwise_distance(cfg.points())) << ','
            << format_double(cfg.max_norm()) << '\n';
    }
}

}  // namespace releq
