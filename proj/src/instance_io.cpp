#include "gmssl/instance_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gmssl/errors.hpp"

namespace gmssl {

AffinitySystem read_instance(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParamError("read_instance: cannot open " + path);
    AffinitySystem sys;
    size_t n_es = 0, n_et = 0;
    if (!(f >> sys.n >> n_es >> n_et) || sys.n < 1)
        throw ParamError("read_instance: bad header in " + path);
    sys.c_v = Matrix(sys.n, sys.n);
    for (auto& v : sys.c_v.v)
        if (!(f >> v)) throw ParamError("read_instance: truncated c_v block");

    std::map<std::pair<int, int>, int> es_idx, et_idx;
    std::vector<std::tuple<int, int, double>> entries;  // (es, et, value)
    int si, sj, ti, tj;
    double val;
    while (f >> si >> sj >> ti >> tj >> val) {
        auto check = [&](int a, int b, const char* side) {
            if (a < 0 || b < 0 || a >= sys.n || b >= sys.n || a >= b)
                throw ParamError(std::string("read_instance: bad ") + side +
                                 " edge (want 0 <= i < j < N)");
        };
        check(si, sj, "source");
        check(ti, tj, "target");
        auto [it_s, new_s] = es_idx.try_emplace({si, sj}, int(sys.edges_s.size()));
        if (new_s) sys.edges_s.push_back({si, sj});
        auto [it_t, new_t] = et_idx.try_emplace({ti, tj}, int(sys.edges_t.size()));
        if (new_t) sys.edges_t.push_back({ti, tj});
        entries.emplace_back(it_s->second, it_t->second, val);
    }
    if (!f.eof() && f.fail()) throw ParamError("read_instance: malformed edge line");
    if (sys.edges_s.size() != n_es || sys.edges_t.size() != n_et)
        throw ParamError("read_instance: header edge counts do not match edge lines");

    sys.c_e = Matrix(int(sys.edges_s.size()), int(sys.edges_t.size()));
    for (auto& [e, t, v] : entries) sys.c_e(e, t) = v;
    return sys;
}

void write_instance(const AffinitySystem& sys, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParamError("write_instance: cannot open " + path);
    char buf[64];
    f << sys.n << " " << sys.edges_s.size() << " " << sys.edges_t.size() << "\n";
    for (int i = 0; i < sys.n; ++i) {
        for (int j = 0; j < sys.n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", sys.c_v(i, j));
            f << buf << (j + 1 == sys.n ? "" : " ");
        }
        f << "\n";
    }
    for (size_t e = 0; e < sys.edges_s.size(); ++e)
        for (size_t t = 0; t < sys.edges_t.size(); ++t) {
            std::snprintf(buf, sizeof buf, "%.17g", sys.c_e(int(e), int(t)));
            f << sys.edges_s[e].first << " " << sys.edges_s[e].second << " "
              << sys.edges_t[t].first << " " << sys.edges_t[t].second << " " << buf << "\n";
        }
}

}  // namespace gmssl
