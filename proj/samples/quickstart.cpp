// Synthesizes a small 3-class corpus, turns it into log-STFT windows, trains a
// CNN and an RNN base on one split, builds a Hybrid from them and reports
// per-class scores on the held-out fold.
//
//   quickstart [output-dir]

#include <cstdio>
#include <filesystem>

#include "hybil/hybil.hpp"

int main(int argc, char** argv) {
  using namespace hybil;
  const std::filesystem::path out = argc > 1 ? argv[1] : "quickstart-out";

  SynthSpec spec;
  spec.classes = 3;
  spec.events_per_class = 6;
  spec.seed = 7;
  const auto corpus = generate_synthetic(spec, out / "corpus");
  const auto pre = preprocess_corpus(corpus.manifest);
  const Dataset& ds = pre.dataset;
  std::printf("%zu windows of shape %s\n", ds.size(), shape_string(kSampleShape).c_str());

  const auto plan = make_fold_plan(ds, 3, Strata::event, spec.seed);
  const SampleSet train(ds, plan.training(0)), val(ds, plan.validation[0]);

  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.max_epochs_base = 15;
  cfg.max_epochs_head = 100;
  cfg.max_epochs_finetune = 3;
  cfg.patience = 3;
  const ModelDims dims{4, 8, 2, 8};

  const auto cnn = train_base(ModelKind::cnn, train, val, cfg, dims, spec.classes);
  const auto rnn = train_base(ModelKind::rnn, train, val, cfg, dims, spec.classes);
  const auto hybrid = train_bilinear_two_step(ModelKind::hybrid, &cnn.model, &rnn.model, train, val, cfg, dims,
                                              spec.classes);

  for (const auto* m : {&cnn.model, &rnn.model, &hybrid.model}) {
    const auto report = class_report(evaluate(*m, val).confusion);
    std::printf("%-7s weighted F1 %.3f\n", std::string(display_name(m->kind())).c_str(), report.weighted_f1);
  }
  save_checkpoint(out / "hybrid", hybrid.model, ds.schema);
  std::printf("checkpoint written to %s\n", (out / "hybrid").string().c_str());
}
