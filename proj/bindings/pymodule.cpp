// Python bindings for the core operations: corpus synthesis, kNN graphs,
// solvers, Gumbel sampling and the IMLE forward/backward step.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmssl/eval.hpp"
#include "gmssl/imle.hpp"
#include "gmssl/matcher.hpp"
#include "gmssl/synth_data.hpp"
#include "gmssl/trainer.hpp"

namespace py = pybind11;
using namespace gmssl;

namespace {

Matrix matrix_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw ContractError("expected a 2-D array");
    Matrix m(int(arr.shape(0)), int(arr.shape(1)));
    std::copy(arr.data(), arr.data() + m.v.size(), m.v.begin());
    return m;
}

py::array_t<double> array_from_matrix(const Matrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy(m.v.begin(), m.v.end(), arr.mutable_data());
    return arr;
}

AffinitySystem system_from_py(py::array_t<double> c_v,
                              const std::vector<std::pair<int, int>>& edges_s,
                              const std::vector<std::pair<int, int>>& edges_t,
                              py::object c_e) {
    AffinitySystem sys;
    sys.c_v = matrix_from_array(c_v);
    if (sys.c_v.rows != sys.c_v.cols) throw ContractError("c_v must be square");
    sys.n = sys.c_v.rows;
    sys.edges_s = edges_s;
    sys.edges_t = edges_t;
    for (auto [i, j] : sys.edges_s)
        if (i < 0 || j <= i || j >= sys.n) throw ParamError("bad s-edge");
    for (auto [a, b] : sys.edges_t)
        if (a < 0 || b <= a || b >= sys.n) throw ParamError("bad t-edge");
    if (c_e.is_none()) {
        sys.c_e = Matrix(int(edges_s.size()), int(edges_t.size()));
    } else {
        sys.c_e = matrix_from_array(c_e.cast<py::array_t<double>>());
        if (sys.c_e.rows != int(edges_s.size()) || sys.c_e.cols != int(edges_t.size()))
            throw ContractError("c_e shape must be |Es| x |Et|");
    }
    return sys;
}

py::dict matching_to_py(const Matching& m) {
    py::dict d;
    d["assignment"] = m.assignment;
    d["objective"] = m.objective;
    d["mode"] = to_string(m.mode);
    return d;
}

}  // namespace

PYBIND11_MODULE(_gmssl, m) {
    m.doc() = "second-order graph matching SSL core";

    py::register_exception<ParamError>(m, "ParamError", PyExc_ValueError);
    py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);

    m.def(
        "gen_corpus",
        [](uint64_t seed, int count, double dup_fraction) {
            Corpus c = generate_corpus(seed, count, dup_fraction);
            int canvas = c.canvas;
            py::array_t<double> imgs({count, canvas, canvas});
            std::vector<int> tags(count), dups(count);
            double* out = imgs.mutable_data();
            for (int i = 0; i < count; ++i) {
                const auto& im = c.images[i];
                std::copy(im.pixels.v.begin(), im.pixels.v.end(),
                          out + size_t(i) * canvas * canvas);
                tags[i] = im.class_tag;
                dups[i] = im.dup_group;
            }
            return py::make_tuple(imgs, tags, dups);
        },
        py::arg("seed"), py::arg("count"), py::arg("dup_fraction") = 0.0,
        "returns (images, class_tags, dup_groups); dup_group -1 means none");

    m.def(
        "knn_adjacency",
        [](py::array_t<double> x, int k) {
            BatchGraph g = knn_graph(matrix_from_array(x), k);
            int n = g.n();
            py::array_t<uint8_t> adj({n, n});
            std::copy(g.adj.begin(), g.adj.end(), adj.mutable_data());
            return adj;
        },
        py::arg("x"), py::arg("k"),
        "symmetrized cosine kNN adjacency over rows of x");

    m.def(
        "solve_lap",
        [](py::array_t<double> c_v) { return matching_to_py(solve_lap(matrix_from_array(c_v))); },
        py::arg("c_v"));

    m.def(
        "solve",
        [](py::array_t<double> c_v, const std::vector<std::pair<int, int>>& edges_s,
           const std::vector<std::pair<int, int>>& edges_t, py::object c_e,
           const std::string& mode, int node_cap, int max_iters) {
            AffinitySystem sys = system_from_py(c_v, edges_s, edges_t, c_e);
            return matching_to_py(
                solve_with_mode(sys, solve_mode_from_string(mode), node_cap, max_iters));
        },
        py::arg("c_v"), py::arg("edges_s") = std::vector<std::pair<int, int>>{},
        py::arg("edges_t") = std::vector<std::pair<int, int>>{}, py::arg("c_e") = py::none(),
        py::arg("mode") = "heuristic", py::arg("node_cap") = kDefaultExactCap,
        py::arg("max_iters") = 1000,
        "solve the second-order matching problem; edge values apply to the "
        "canonical orientation and flip sign for crossed matches");

    m.def(
        "matching_objective",
        [](py::array_t<double> c_v, const std::vector<std::pair<int, int>>& edges_s,
           const std::vector<std::pair<int, int>>& edges_t, py::object c_e,
           const std::vector<int>& assignment) {
            AffinitySystem sys = system_from_py(c_v, edges_s, edges_t, c_e);
            return matching_objective(sys, assignment);
        },
        py::arg("c_v"), py::arg("edges_s"), py::arg("edges_t"), py::arg("c_e"),
        py::arg("assignment"));

    m.def(
        "gumbel_sample",
        [](uint64_t seed, size_t count) {
            Rng rng(seed);
            auto xs = gumbel_sample(rng, count);
            py::array_t<double> arr({py::ssize_t(count)});
            std::copy(xs.begin(), xs.end(), arr.mutable_data());
            return arr;
        },
        py::arg("seed"), py::arg("count"));

    m.def(
        "hamming_loss",
        [](const std::vector<int>& v_hat, const std::vector<int>& v_star) {
            Matching m;
            m.assignment = v_hat;
            return hamming_loss(m, v_star);
        },
        py::arg("v_hat"), py::arg("v_star"));

    m.def(
        "imle_step",
        [](py::array_t<double> c_v, const std::vector<std::pair<int, int>>& edges_s,
           const std::vector<std::pair<int, int>>& edges_t, py::object c_e,
           const std::vector<int>& gold, double lambda, double noise_scale, uint64_t seed,
           const std::string& mode) {
            AffinitySystem sys = system_from_py(c_v, edges_s, edges_t, c_e);
            Rng rng(seed);
            auto [vtilde, state] =
                imle_forward(sys, solve_mode_from_string(mode), lambda, noise_scale, rng);
            double loss = hamming_loss(vtilde, gold);
            ImleGrads g = imle_backward(state, hamming_loss_grad(gold));
            py::dict d;
            d["assignment"] = vtilde.assignment;
            d["loss"] = loss;
            d["dc_v"] = array_from_matrix(g.dc_v);
            d["dc_e"] = array_from_matrix(g.dc_e);
            return d;
        },
        py::arg("c_v"), py::arg("edges_s") = std::vector<std::pair<int, int>>{},
        py::arg("edges_t") = std::vector<std::pair<int, int>>{}, py::arg("c_e") = py::none(),
        py::arg("gold") = std::vector<int>{}, py::arg("lambda") = 80.0,
        py::arg("noise_scale") = 1.0, py::arg("seed") = 7, py::arg("mode") = "heuristic",
        "one perturbed solve plus the finite-difference gradient estimate");

    m.def(
        "grad_check",
        [](int n, int samples, double lambda, int oracle_samples, uint64_t seed) {
            GradCheckResult r = imle_grad_check(n, samples, lambda, oracle_samples, seed);
            py::dict d;
            d["imle_mean"] = array_from_matrix(r.imle_mean);
            d["oracle"] = array_from_matrix(r.oracle);
            d["cosine"] = r.cosine_sim;
            return d;
        },
        py::arg("n") = 3, py::arg("samples") = 1000, py::arg("lambda") = 80.0,
        py::arg("oracle_samples") = 100000, py::arg("seed") = 7);

    m.attr("__version__") = "0.1.0";
}
