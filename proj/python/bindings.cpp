#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "seqslice/checkpoint.hpp"
#include "seqslice/cli.hpp"
#include "seqslice/corpus.hpp"
#include "seqslice/decode.hpp"
#include "seqslice/metrics.hpp"
#include "seqslice/oracle.hpp"
#include "seqslice/tsed.hpp"

namespace py = pybind11;
using namespace seqslice;

namespace {

py::dict instance_dict(const corpus::SliceInstance& inst) {
  py::dict d;
  d["program"] = inst.program;
  d["variable"] = inst.criterion.variable;
  d["line"] = inst.criterion.line;
  d["gold_lines"] = inst.gold_lines;
  d["gold_text"] = inst.gold_text;
  d["corruption"] = std::string(corpus::to_string(inst.corruption));
  return d;
}

// A loaded checkpoint with its decoder.
class Slicer {
 public:
  explicit Slicer(const std::filesystem::path& path)
      : ckpt_(model::load_checkpoint(path)), model_(ckpt_.model()) {}

  std::string slice(const std::string& program, const std::string& var, int line, bool lexical,
                    bool syntactic, int beam, int max_len) const {
    corpus::SliceInstance inst;
    inst.program = program;
    inst.criterion = {var, line};
    decode::BeamConfig c;
    c.lexical_on = lexical;
    c.syntactic_on = syntactic;
    c.beam_size = beam;
    c.max_len = max_len;
    py::gil_scoped_release release;
    return decode::slice_instance(model_, ckpt_.vocab, inst, c).slice_text;
  }

  bool copy() const { return ckpt_.config.copy; }
  int vocab_size() const { return ckpt_.vocab.size(); }

 private:
  model::Checkpoint ckpt_;
  model::Model model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learned static slicing with constrained decoding";
  static py::exception<Error> error(m, "SeqsliceError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("generate_program", [](std::uint64_t seed) { return corpus::generate_program(seed); }, py::arg("seed"));
  m.def("make_instance",
        [](const std::string& program, const std::string& var, int line) {
          return instance_dict(corpus::make_instance(program, oracle::SliceCriterion{var, line}));
        },
        py::arg("program"), py::arg("variable"), py::arg("line"));
  m.def("random_instance", [](std::uint64_t seed) {
    return instance_dict(corpus::make_instance(corpus::generate_program(seed), seed));
  }, py::arg("seed"));
  m.def("backward_slice",
        [](const std::string& program, const std::string& var, int line) {
          return oracle::backward_slice(oracle::build_pdg(program), {var, line});
        },
        py::arg("program"), py::arg("variable"), py::arg("line"));
  m.def("tree_edit_distance",
        [](const std::string& a, const std::string& b) {
          return tsed::tree_edit_distance(tsed::LabeledTree::from_ast(lang::parse_source(a)),
                                          tsed::LabeledTree::from_ast(lang::parse_source(b)));
        },
        py::arg("a"), py::arg("b"));
  m.def("prefix_tsed", [](const std::string& source, const std::string& partial) {
    return tsed::prefix_tsed(source, partial);
  }, py::arg("source"), py::arg("partial_slice"));
  m.def("exact_match", [](const std::string& p, const std::string& g) { return metrics::exact_match(p, g); },
        py::arg("pred"), py::arg("gold"));
  m.def("tsed_metric", [](const std::string& p, const std::string& g) { return metrics::tsed_metric(p, g); },
        py::arg("pred"), py::arg("gold"));
  m.def("acc_d", &metrics::acc_d, py::arg("pred_lines"), py::arg("gold_lines"));

  py::class_<Slicer>(m, "Slicer")
      .def(py::init<std::filesystem::path>(), py::arg("checkpoint"))
      .def("slice", &Slicer::slice, py::arg("program"), py::arg("variable"), py::arg("line"),
           py::arg("lexical") = true, py::arg("syntactic") = true, py::arg("beam") = 3, py::arg("max_len") = 256)
      .def_property_readonly("copy", &Slicer::copy)
      .def_property_readonly("vocab_size", &Slicer::vocab_size);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "seqslice");
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a seqslice subcommand in-process; returns (exit code, stdout, stderr).");
}
