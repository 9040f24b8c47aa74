#include "cma/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cma/kernels.hpp"

namespace cma {

namespace fs = std::filesystem;

namespace {

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::vector<std::string>> csv_parse(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(cell);
            cell.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !cell.empty()) {
                row.push_back(cell);
                rows.push_back(row);
            }
            row.clear();
            cell.clear();
            any = false;
        } else {
            cell += c;
            any = true;
        }
    }
    if (quoted) throw InputError("csv: unterminated quoted field");
    if (any || !cell.empty()) {
        row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

std::string holder_column(double gamma, double radius) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "holder_g%g_r%gh", gamma, radius);
    return buf;
}

std::map<std::string, std::string> parse_meta(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return m;
}

std::string field_path(const std::string& dir, std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "phi_%03zu.bin", k);
    return (fs::path(dir) / "fields" / buf).string();
}

std::string meta_text(const RunRecord& r, const ParsedConfig& cfg) {
    std::string s;
    s += "config_hash = " + r.config_hash + "\n";
    s += "schema_hash = " + r.schema_hash + "\n";
    s += "version = " + r.version + "\n";
    s += "scenario = " + cfg.scenario.name + "\n";
    s += "n = " + std::to_string(cfg.scenario.spec.n) + "\n";
    s += "N = " + std::to_string(cfg.scenario.spec.N) + "\n";
    return s;
}

}  // namespace

std::optional<std::string> bundled_scenario_text(const std::string& name) {
    for (const auto& b : bundled_scenarios())
        if (name == b.name) return std::string(b.text);
    return std::nullopt;
}

std::string RunRecord::to_csv() const {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + csv_quote(header[i]);
    s += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + csv_quote(row[i]);
        s += "\n";
    }
    return s;
}

RunRecord RunRecord::from_csv(const std::string& csv) {
    auto rows = csv_parse(csv);
    if (rows.empty()) throw InputError("csv: empty record");
    RunRecord r;
    r.header = rows.front();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != r.header.size())
            throw InputError("csv: row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                             " cells, header has " + std::to_string(r.header.size()));
        r.rows.push_back(rows[i]);
    }
    return r;
}

int RunRecord::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

RunRecord make_record(const ParsedConfig& cfg, const std::vector<ContinuationState>& states,
                      const EstimateReport& report) {
    RunRecord r;
    r.config_hash = hash_hex(cfg.hash);
    r.schema_hash = hash_hex(cfg.schema_hash);
    r.version = kToolVersion;
    r.header = {"eps",         "delta_eps",        "sup_phi",
                "newton_steps", "weighted_c2",     "unweighted_c2",
                "min_siu_residual", "min_comparison_residual", "trace_defect",
                "sum_inverse_at_argmax"};
    const auto& es = cfg.scenario.estimates;
    for (double g : es.gammas)
        for (double rad : es.exclusion_radii) r.header.push_back(holder_column(g, rad));
    r.header.push_back("cauchy_diff");
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto& st = states[k];
        const auto& d = st.diagnostics;
        std::vector<std::string> row = {sci(st.eps),         sci(st.delta_eps),      sci(d.sup_phi),
                                        std::to_string(st.newton_steps), sci(d.weighted_c2), sci(d.unweighted_c2),
                                        sci(d.siu_min),      sci(d.comparison_min),  sci(d.trace_defect),
                                        sci(d.sum_inverse_at_argmax)};
        for (double g : es.gammas)
            for (double rad : es.exclusion_radii) {
                std::string cell;
                for (const auto& h : d.holder)
                    if (h.gamma == g && h.radius_h == rad) cell = sci(h.value);
                row.push_back(cell);
            }
        row.push_back(k > 0 && k - 1 < report.cauchy_table.size() ? sci(report.cauchy_table[k - 1]) : "");
        r.rows.push_back(std::move(row));
    }
    return r;
}

int exit_code_for(const EstimateReport& report, const ContinuationRun& run, bool strict) {
    if (run.failed) return kExitSolver;
    if (report.any(Status::violated)) return kExitVerdict;
    if (strict && report.any(Status::inconclusive)) return kExitVerdict;
    return kExitOk;
}

std::string verdict_summary(const ParsedConfig& cfg, const EstimateReport& report, const ContinuationRun& run,
                            int exit_code) {
    std::ostringstream o;
    o << "scenario " << cfg.scenario.name << "\n";
    o << "config hash " << hash_hex(cfg.hash) << "\n";
    o << "tool version " << kToolVersion << "\n";
    o << "grid n=" << cfg.scenario.spec.n << " N=" << cfg.scenario.spec.N << "\n";
    o << "C " << sci(report.C) << (report.C_overridden ? " (configured)" : " (Hessian lower bound of psi2)") << "\n";
    for (const auto& [k, v] : report.scalars) o << "  " << k << " = " << sci(v) << "\n";
    for (const auto& note : cfg.notes) o << "note: " << note << "\n";
    if (run.failed) o << "solver error: " << run.error << "\n";
    o << "\n";
    for (const auto& v : report.verdicts) {
        char name[32];
        std::snprintf(name, sizeof name, "%-22s", v.name.c_str());
        o << name << " " << to_string(v.status) << "  " << v.detail << "\n";
        if (v.witness) {
            o << "    witness rung " << v.witness->rung;
            if (v.witness->point) {
                o << " at (";
                for (int a = 0; a < 2 * cfg.scenario.spec.n; ++a) o << (a ? ", " : "") << sci((*v.witness->point)[a]);
                o << ")";
            }
            for (const auto& [k, x] : v.witness->values) o << " " << k << "=" << sci(x);
            o << "\n";
        }
    }
    o << "\nexit " << exit_code << "\n";
    return o.str();
}

std::string run_directory(const ParsedConfig& cfg, const RunFlags& flags) {
    const std::string base = flags.output_dir ? *flags.output_dir : cfg.output.directory;
    return (fs::path(base) / (cfg.scenario.name + "-" + hash_hex(cfg.hash))).string();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

// Layout: 8-byte magic, int32 n, int32 N, double eps, then N^{2n} doubles, little endian host order.
void write_field(const std::string& path, const GridField& f, double eps) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    const char magic[8] = {'C', 'M', 'A', 'F', 'L', 'D', '0', '1'};
    const std::int32_t n = f.spec().n, N = f.spec().N;
    out.write(magic, 8);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&N), sizeof N);
    out.write(reinterpret_cast<const char*>(&eps), sizeof eps);
    out.write(reinterpret_cast<const char*>(f.values().data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!out) throw InputError("write failed: " + path);
}

GridField read_field(const std::string& path, const TorusSpec& spec, double* eps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    char magic[8];
    std::int32_t n = 0, N = 0;
    double e = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&N), sizeof N);
    in.read(reinterpret_cast<char*>(&e), sizeof e);
    if (!in || std::memcmp(magic, "CMAFLD01", 8) != 0) throw InputError(path + ": not a field file");
    if (n != spec.n || N != spec.N) throw InputError(path + ": grid does not match the config");
    std::vector<double> v(spec.size());
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw InputError(path + ": truncated");
    if (eps) *eps = e;
    return GridField(spec, std::move(v));
}

namespace {

RunOutcome finish(const ParsedConfig& cfg, const RunFlags& flags, ContinuationRun run, bool write_fields) {
    RunOutcome out;
    out.report = build_report(cfg.scenario, run.states);
    out.record = make_record(cfg, run.states, out.report);
    out.exit_code = exit_code_for(out.report, run, flags.strict);
    out.verdict_text = verdict_summary(cfg, out.report, run, out.exit_code);
    out.directory = run_directory(cfg, flags);
    if (flags.write) {
        fs::create_directories(out.directory);
        const bool csv = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "csv") != cfg.output.formats.end();
        const bool txt = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "txt") != cfg.output.formats.end();
        if (csv) write_text_file((fs::path(out.directory) / "record.csv").string(), out.record.to_csv());
        if (txt) write_text_file((fs::path(out.directory) / "verdicts.txt").string(), out.verdict_text);
        write_text_file((fs::path(out.directory) / "meta.txt").string(), meta_text(out.record, cfg));
        write_text_file((fs::path(out.directory) / "config.echo").string(), cfg.echo);
        if (write_fields) {
            fs::create_directories(fs::path(out.directory) / "fields");
            for (std::size_t k = 0; k < run.states.size(); ++k)
                write_field(field_path(out.directory, k), run.states[k].phi, run.states[k].eps);
        }
    }
    out.run = std::move(run);
    return out;
}

}  // namespace

RunOutcome run(const ParsedConfig& cfg, const RunFlags& flags) {
    auto cr = run_continuation(cfg.scenario);
    return finish(cfg, flags, std::move(cr), cfg.output.write_fields);
}

RunOutcome verify(const ParsedConfig& cfg, const RunFlags& flags) {
    const Scenario& sc = cfg.scenario;
    const std::string dir = run_directory(cfg, flags);
    const auto meta = parse_meta(read_text_file((fs::path(dir) / "meta.txt").string()));
    if (!meta.count("config_hash") || meta.at("config_hash") != hash_hex(cfg.hash))
        throw InputError(dir + ": stored run was produced by a different config");
    std::optional<RunRecord> stored;
    if (fs::exists(fs::path(dir) / "record.csv")) stored = load_record(dir);

    ContinuationRun cr;
    for (std::size_t k = 0; k < sc.eps_schedule.size(); ++k) {
        const std::string path = field_path(dir, k);
        if (!fs::exists(path)) {
            if (k == 0) throw InputError(dir + ": no stored fields");
            cr.failed = true;
            cr.solver_error = true;
            cr.failed_rung = static_cast<int>(k);
            cr.error = "rung " + std::to_string(k) + " has no stored field";
            break;
        }
        double eps = 0;
        ContinuationState st;
        st.phi = read_field(path, sc.spec, &eps);
        if (eps != sc.eps_schedule[k]) throw InputError(path + ": eps does not match the schedule");
        auto rd = regularized_data(sc, eps);
        st.eps = eps;
        st.delta_eps = rd.delta;
        st.F = rd.F;
        const auto a = sc.alpha.coefficients(sc.spec, eps);
        const auto pos = positivity_check(a, st.phi);
        if (!pos.ok) throw InputError(path + ": stored potential is not admissible");
        const GridField dens = ma_density(a, st.phi);
        double res = 0;
        for (std::size_t i = 0; i < dens.size(); ++i) res = std::max(res, std::fabs(std::log(dens[i] / st.F[i])));
        st.residual = res;
        if (stored) {
            const int c = stored->column("newton_steps");
            if (c >= 0 && k < stored->rows.size()) st.newton_steps = std::stoi(stored->rows[k][c]);
        }
        st.Phi = shift_potential(st, sc.alpha);
        st.diagnostics = rung_diagnostics(sc, st, rd);
        cr.states.push_back(std::move(st));
    }
    RunFlags f = flags;
    f.write = false;
    return finish(cfg, f, std::move(cr), false);
}

std::vector<ColumnDiff> CompareResult::exceeded() const {
    std::vector<ColumnDiff> out;
    for (const auto& c : columns)
        if (!c.within) out.push_back(c);
    return out;
}

std::map<std::string, ColumnTolerance> default_tolerances() {
    return {
        {"eps", {0.0, 0.0}},
        {"delta_eps", {1e-6, 1e-3}},
        {"sup_phi", {1e-3, 0.0}},
        {"newton_steps", {1e9, 0.0}},
        {"cauchy_diff", {1e-3, 0.0}},
    };
}

CompareResult compare(const RunRecord& a, const RunRecord& b, const std::map<std::string, ColumnTolerance>& tol) {
    if (!a.schema_hash.empty() && !b.schema_hash.empty() && a.schema_hash != b.schema_hash)
        throw InputError("compare: records describe different experiments (schema " + a.schema_hash + " vs " +
                         b.schema_hash + ")");
    if (a.header != b.header) throw InputError("compare: records have different columns");
    if (a.rows.size() != b.rows.size()) throw InputError("compare: records have different numbers of rungs");
    CompareResult r;
    r.identical = a.rows == b.rows;
    const ColumnTolerance fallback{1e-8, 1e-6};
    for (std::size_t c = 0; c < a.header.size(); ++c) {
        ColumnDiff d;
        d.column = a.header[c];
        const auto it = tol.find(d.column);
        const ColumnTolerance t = it == tol.end() ? fallback : it->second;
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            const std::string& x = a.rows[i][c];
            const std::string& y = b.rows[i][c];
            if (x == y) continue;
            double u = 0, v = 0;
            try {
                u = std::stod(x);
                v = std::stod(y);
            } catch (const std::exception&) {
                d.within = false;
                d.row = static_cast<int>(i);
                d.max_abs = std::numeric_limits<double>::infinity();
                continue;
            }
            const double ad = std::fabs(u - v);
            const double rd = ad / std::max(std::fabs(u), std::fabs(v));
            if (ad > d.max_abs) {
                d.max_abs = ad;
                d.row = static_cast<int>(i);
            }
            d.max_rel = std::max(d.max_rel, rd);
            if (ad > t.abs && rd > t.rel) d.within = false;
        }
        r.columns.push_back(d);
    }
    return r;
}

RunRecord load_record(const std::string& path) {
    fs::path p(path);
    fs::path dir = p;
    if (fs::is_directory(p))
        p /= "record.csv";
    else
        dir = p.parent_path();
    RunRecord r = RunRecord::from_csv(read_text_file(p.string()));
    const fs::path meta = dir / "meta.txt";
    if (fs::exists(meta)) {
        const auto m = parse_meta(read_text_file(meta.string()));
        if (m.count("config_hash")) r.config_hash = m.at("config_hash");
        if (m.count("schema_hash")) r.schema_hash = m.at("schema_hash");
        if (m.count("version")) r.version = m.at("version");
    }
    return r;
}

}  // namespace cma
