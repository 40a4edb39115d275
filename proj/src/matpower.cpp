#include "flowbench/matpower.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace flowbench {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Row {
    int line = 0;
    std::vector<double> values;
};

struct Table {
    int line = 0;
    std::vector<Row> rows;
};

struct RawCase {
    std::string name;
    std::optional<double> base_mva;
    int base_line = 0;
    std::map<std::string, Table> tables;
};

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\'') quoted = !quoted;
        if (line[i] == '%' && !quoted) return line.substr(0, i);
    }
    return line;
}

double parse_number(std::string_view tok, int line) {
    std::string s(tok);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ParseError(line, "invalid number '" + s + "'");
    return v;
}

Row parse_row(std::string_view text, int line) {
    Row row{line, {}};
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == ',' || text[i] == '\r')) ++i;
        size_t j = i;
        while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != ',' && text[j] != '\r') ++j;
        if (j > i) row.values.push_back(parse_number(text.substr(i, j - i), line));
        i = j;
    }
    return row;
}

RawCase scan(std::string_view text) {
    RawCase raw;
    std::vector<std::string_view> lines;
    {
        size_t start = 0;
        while (start <= text.size()) {
            size_t nl = text.find('\n', start);
            if (nl == std::string_view::npos) {
                lines.push_back(text.substr(start));
                break;
            }
            lines.push_back(text.substr(start, nl - start));
            start = nl + 1;
        }
    }

    Table* open = nullptr;
    std::string open_name;
    for (size_t ln = 0; ln < lines.size(); ++ln) {
        const int line_no = static_cast<int>(ln) + 1;
        std::string_view body = trim(strip_comment(lines[ln]));
        if (body.empty()) continue;

        if (!open) {
            if (body.starts_with("function")) {
                auto eq = body.find('=');
                if (eq != std::string_view::npos) raw.name = std::string(trim(body.substr(eq + 1)));
                continue;
            }
            if (!body.starts_with("mpc.")) continue;
            auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            std::string key(trim(body.substr(4, eq - 4)));
            std::string_view rhs = trim(body.substr(eq + 1));
            if (key == "baseMVA") {
                if (rhs.ends_with(';')) rhs.remove_suffix(1);
                raw.base_mva = parse_number(trim(rhs), line_no);
                raw.base_line = line_no;
                continue;
            }
            if (!rhs.starts_with('[')) continue;  // version string and other scalars
            if (raw.tables.count(key)) throw ParseError(line_no, "duplicate table mpc." + key);
            open = &raw.tables[key];
            open->line = line_no;
            open_name = key;
            body = rhs.substr(1);
        }

        // Inside a table: split on ';' and stop at ']'.
        bool closes = false;
        auto close = body.find(']');
        if (close != std::string_view::npos) {
            closes = true;
            body = body.substr(0, close);
        }
        size_t start = 0;
        while (start <= body.size()) {
            size_t semi = body.find(';', start);
            std::string_view piece = trim(body.substr(start, semi == std::string_view::npos ? body.npos : semi - start));
            if (!piece.empty()) open->rows.push_back(parse_row(piece, line_no));
            if (semi == std::string_view::npos) break;
            start = semi + 1;
        }
        if (closes) open = nullptr;
    }
    if (open) throw ParseError(open->line, "table mpc." + open_name + " is not closed");
    return raw;
}

const Table& require_table(const RawCase& raw, const std::string& name, size_t min_cols) {
    auto it = raw.tables.find(name);
    if (it == raw.tables.end()) throw ParseError(0, "missing table mpc." + name);
    for (const Row& r : it->second.rows)
        if (r.values.size() < min_cols)
            throw ParseError(r.line, "mpc." + name + " row has " + std::to_string(r.values.size()) +
                                         " columns, expected at least " + std::to_string(min_cols));
    return it->second;
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

Network parse_matpower(std::string_view text) {
    RawCase raw = scan(text);
    if (!raw.base_mva) throw ParseError(0, "missing mpc.baseMVA");
    const double base = *raw.base_mva;
    if (!(base > 0.0)) throw ParseError(raw.base_line, "baseMVA must be positive");

    const Table& bus_t = require_table(raw, "bus", 13);
    const Table& gen_t = require_table(raw, "gen", 10);
    const Table& branch_t = require_table(raw, "branch", 11);

    Network net;
    net.name = raw.name;
    net.base_mva = base;

    std::map<int, int> index_of;
    std::vector<int> slack_numbers;
    std::vector<int> bus_lines;
    for (const Row& r : bus_t.rows) {
        const auto& v = r.values;
        Bus b;
        b.number = static_cast<int>(v[0]);
        if (index_of.count(b.number)) throw ParseError(r.line, "duplicate bus number " + std::to_string(b.number));
        int type = static_cast<int>(v[1]);
        if (type < 1 || type > 3)
            throw ParseError(r.line, "bus " + std::to_string(b.number) + " has unsupported type " + std::to_string(type));
        b.kind = static_cast<BusKind>(type);
        if (b.kind == BusKind::Slack) slack_numbers.push_back(b.number);
        b.gs = v[4] / base;
        b.bs = v[5] / base;
        b.area = static_cast<int>(v[6]);
        b.vm0 = v[7];
        b.va0 = v[8] * kDeg;
        b.base_kv = v[9];
        b.zone = static_cast<int>(v[10]);
        b.vmax = v[11];
        b.vmin = v[12];
        if (b.vmin > b.vmax) throw ParseError(r.line, "bus " + std::to_string(b.number) + " has Vmin > Vmax");
        const int idx = net.bus_count();
        index_of[b.number] = idx;
        net.buses.push_back(b);
        bus_lines.push_back(r.line);
        if (v[2] != 0.0 || v[3] != 0.0) net.loads.push_back({idx, v[2] / base, v[3] / base});
    }
    if (slack_numbers.empty()) throw ParseError(bus_t.line, "no slack bus (type 3) in mpc.bus");
    if (slack_numbers.size() > 1) {
        std::string ids;
        for (size_t i = 0; i < slack_numbers.size(); ++i) ids += (i ? ", " : "") + std::to_string(slack_numbers[i]);
        throw ParseError(bus_lines[index_of[slack_numbers[1]]], "multiple slack buses: " + ids);
    }

    auto resolve = [&](double number, int line, const char* what) {
        auto it = index_of.find(static_cast<int>(number));
        if (it == index_of.end())
            throw ParseError(line, std::string(what) + " references unknown bus " +
                                       std::to_string(static_cast<int>(number)));
        return it->second;
    };

    for (const Row& r : gen_t.rows) {
        const auto& v = r.values;
        Generator g;
        g.bus = resolve(v[0], r.line, "generator");
        g.pg = v[1] / base;
        g.qg = v[2] / base;
        g.qmax = v[3] / base;
        g.qmin = v[4] / base;
        g.vset = v[5];
        g.mbase = v[6];
        g.in_service = v[7] > 0.0;
        g.pmax = v[8] / base;
        g.pmin = v[9] / base;
        net.generators.push_back(g);
    }

    for (const Row& r : branch_t.rows) {
        const auto& v = r.values;
        Branch br;
        br.from = resolve(v[0], r.line, "branch");
        br.to = resolve(v[1], r.line, "branch");
        br.r = v[2];
        br.x = v[3];
        br.b_charging = v[4];
        br.rate = v[5] / base;
        br.tap = v[8] == 0.0 ? 1.0 : v[8];
        br.shift = v[9] * kDeg;
        br.in_service = v[10] > 0.0;
        if (v.size() >= 13) {
            br.angmin = v[11] * kDeg;
            br.angmax = v[12] * kDeg;
        }
        if (br.from == br.to) throw ParseError(r.line, "branch connects a bus to itself");
        if (br.r == 0.0 && br.x == 0.0) throw ParseError(r.line, "branch has zero series impedance");
        net.branches.push_back(br);
    }

    if (auto it = raw.tables.find("gencost"); it != raw.tables.end()) {
        const auto& rows = it->second.rows;
        for (size_t g = 0; g < net.generators.size() && g < rows.size(); ++g) {
            const Row& r = rows[g];
            const auto& v = r.values;
            if (v.size() < 4) throw ParseError(r.line, "mpc.gencost row is too short");
            const int model = static_cast<int>(v[0]);
            const int ncost = static_cast<int>(v[3]);
            Generator& gen = net.generators[g];
            if (model == 2) {
                if (ncost < 1 || ncost > 3 || v.size() < 4 + static_cast<size_t>(ncost))
                    throw ParseError(r.line, "polynomial gencost must list 1 to 3 coefficients");
                // coefficients are c(n-1) ... c0 in $/MW^k; convert to p.u. power
                double c[3] = {0.0, 0.0, 0.0};  // c0, c1, c2
                for (int k = 0; k < ncost; ++k) c[ncost - 1 - k] = v[4 + k];
                gen.cost_a = c[2] * base * base;
                gen.cost_b = c[1] * base;
                gen.cost_c = c[0];
            } else if (model == 1) {
                if (ncost < 2 || v.size() < 4 + 2 * static_cast<size_t>(ncost))
                    throw ParseError(r.line, "piecewise gencost needs at least two points");
                // First segment slope stands in for the linear coefficient.
                double dx = v[6] - v[4];
                gen.cost_b = dx != 0.0 ? (v[7] - v[5]) / dx * base : 0.0;
            } else {
                throw ParseError(r.line, "unknown gencost model " + std::to_string(model));
            }
        }
    }
    return net;
}

Network load_matpower(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    Network net = parse_matpower(ss.str());
    if (net.name.empty()) net.name = path.stem().string();
    return net;
}

std::string emit_matpower(const Network& net) {
    const double base = net.base_mva;
    std::ostringstream out;
    auto n = [](double v) { return format_number(v); };

    out << "function mpc = " << (net.name.empty() ? "case" : net.name) << "\n\n";
    out << "mpc.version = '2';\n\n";
    out << "mpc.baseMVA = " << n(base) << ";\n\n";

    std::vector<double> pd(net.buses.size(), 0.0), qd(net.buses.size(), 0.0);
    for (const Load& l : net.loads) {
        pd[l.bus] += l.pd;
        qd[l.bus] += l.qd;
    }

    out << "%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\nmpc.bus = [\n";
    for (size_t i = 0; i < net.buses.size(); ++i) {
        const Bus& b = net.buses[i];
        out << '\t' << b.number << '\t' << static_cast<int>(b.kind) << '\t' << n(pd[i] * base) << '\t'
            << n(qd[i] * base) << '\t' << n(b.gs * base) << '\t' << n(b.bs * base) << '\t' << b.area << '\t'
            << n(b.vm0) << '\t' << n(b.va0 / kDeg) << '\t' << n(b.base_kv) << '\t' << b.zone << '\t' << n(b.vmax)
            << '\t' << n(b.vmin) << ";\n";
    }
    out << "];\n\n";

    out << "%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\nmpc.gen = [\n";
    for (const Generator& g : net.generators) {
        out << '\t' << net.buses[g.bus].number << '\t' << n(g.pg * base) << '\t' << n(g.qg * base) << '\t'
            << n(g.qmax * base) << '\t' << n(g.qmin * base) << '\t' << n(g.vset) << '\t' << n(g.mbase) << '\t'
            << (g.in_service ? 1 : 0) << '\t' << n(g.pmax * base) << '\t' << n(g.pmin * base) << ";\n";
    }
    out << "];\n\n";

    out << "%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n"
           "mpc.branch = [\n";
    for (const Branch& br : net.branches) {
        out << '\t' << net.buses[br.from].number << '\t' << net.buses[br.to].number << '\t' << n(br.r) << '\t'
            << n(br.x) << '\t' << n(br.b_charging) << '\t' << n(br.rate * base) << "\t0\t0\t"
            << n(br.tap == 1.0 ? 0.0 : br.tap) << '\t' << n(br.shift / kDeg) << '\t' << (br.in_service ? 1 : 0)
            << '\t' << n(br.angmin / kDeg) << '\t' << n(br.angmax / kDeg) << ";\n";
    }
    out << "];\n\n";

    out << "%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\nmpc.gencost = [\n";
    for (const Generator& g : net.generators)
        out << "\t2\t0\t0\t3\t" << n(g.cost_a / (base * base)) << '\t' << n(g.cost_b / base) << '\t' << n(g.cost_c)
            << ";\n";
    out << "];\n";
    return out.str();
}

}  // namespace flowbench
