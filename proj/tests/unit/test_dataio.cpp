#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "hybil/dataio/checkpoint.hpp"
#include "hybil/dataio/dataset_io.hpp"
#include "hybil/dataio/synth.hpp"
#include "support/files.hpp"
#include "support/oracles.hpp"

namespace hybil {
namespace {

using testing::random_tensor;

using testing::contains;
using testing::error_of;
using testing::scratch_dir;

// --- tensor container ---

TEST(TensorContainer, HeaderLayoutIsPinned) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto b = encode_tensor(t);
  ASSERT_EQ(b.size(), 4u + 2 + 1 + 1 + 2 * 4 + 24);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "EEGT");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 0);  // float32
  EXPECT_EQ(b[7], 2);  // ndim
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[9], 0);
  EXPECT_EQ(b[12], 3);
  // 1.0f little-endian = 00 00 80 3f
  EXPECT_EQ(b[16], 0x00);
  EXPECT_EQ(b[18], 0x80);
  EXPECT_EQ(b[19], 0x3f);
}

TEST(TensorContainer, RoundTripIsBitIdentical) {
  Rng rng(21);
  const auto dir = scratch_dir("container");
  Tensor t = random_tensor({32, 9, 19}, rng, -1e6, 1e6);
  t.data()[0] = -0.0f;
  t.data()[1] = std::numeric_limits<float>::denorm_min();
  t.data()[2] = std::numeric_limits<float>::infinity();
  t.data()[3] = std::numeric_limits<float>::quiet_NaN();
  write_tensor(dir / "t.eegt", t);
  const Tensor back = read_tensor(dir / "t.eegt");
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.raw(), t.raw(), t.size() * sizeof(float)), 0);
  EXPECT_EQ(encode_tensor(back), read_bytes(dir / "t.eegt"));
}

TEST(TensorContainer, BadMagic) {
  auto b = encode_tensor(Tensor({2}, {1, 2}));
  std::memcpy(b.data(), "XXXX", 4);
  const auto msg = error_of<FormatError>([&] { decode_tensor(b); });
  EXPECT_TRUE(contains(msg, "format error")) << msg;
  EXPECT_TRUE(contains(msg, "bad magic")) << msg;
}

TEST(TensorContainer, TruncatedPayloadReportsExpectedBytes) {
  auto b = encode_tensor(Tensor::zeros({2, 3}));
  b.resize(b.size() - 4);
  const auto msg = error_of<FormatError>([&] { decode_tensor(b); });
  EXPECT_TRUE(contains(msg, "truncated payload: expected 24 bytes, got 20")) << msg;
}

TEST(TensorContainer, UnsupportedDtypeAndVersion) {
  auto b = encode_tensor(Tensor::zeros({2}));
  auto d = b;
  d[6] = 1;
  EXPECT_TRUE(contains(error_of<FormatError>([&] { decode_tensor(d); }), "unsupported dtype 1"));
  auto v = b;
  v[4] = 2;
  EXPECT_TRUE(contains(error_of<FormatError>([&] { decode_tensor(v); }), "unsupported version 2"));
  auto tail = b;
  tail.push_back(0);
  EXPECT_TRUE(contains(error_of<FormatError>([&] { decode_tensor(tail); }), "trailing data"));
  EXPECT_THROW(decode_tensor({'E', 'E', 'G'}), FormatError);
}

// --- schema and manifest ---

TEST(Schema, ClassLists) {
  EXPECT_EQ(tuh_schema().size(), 8u);
  EXPECT_EQ(epilepsiae_schema().size(), 4u);
  EXPECT_EQ(tuh_schema().resolve("ABSZ"), 4u);
  EXPECT_EQ(tuh_schema().resolve("absence"), 4u);
  EXPECT_EQ(tuh_schema().resolve("Tonic Clonic"), 6u);
  EXPECT_EQ(epilepsiae_schema().resolve("secondarily-generalized"), 3u);
  EXPECT_EQ(schema_by_name("synth4"), synthetic_schema(4));
  EXPECT_THROW(schema_by_name("synth1"), ConfigError);
  EXPECT_THROW(schema_by_name("chb"), ConfigError);
  EXPECT_THROW(tuh_schema().resolve("XYZ"), SchemaError);
}

const std::string kHeader = "file,sample_rate,channels,annotations,patient_id,event_id\n";

TEST(Manifest, HeaderOnlyIsEmpty) {
  std::istringstream in(kHeader);
  EXPECT_TRUE(parse_manifest(in, tuh_schema()).rows.empty());
}

TEST(Manifest, ParsesRows) {
  std::istringstream in(kHeader + "a.eegt,256,\"Fp1;Fp2\",\"1.5:4:ABSZ;10:12.25:cpsz\",P1,E1\n"
                                  "b.eegt,400,Cz,,P2,E2\n");
  const auto m = parse_manifest(in, tuh_schema());
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_EQ(m.rows[0].channels, (std::vector<std::string>{"Fp1", "Fp2"}));
  ASSERT_EQ(m.rows[0].annotations.size(), 2u);
  EXPECT_EQ(m.rows[0].annotations[0].label, 4u);
  EXPECT_DOUBLE_EQ(m.rows[0].annotations[1].end, 12.25);
  EXPECT_EQ(m.rows[0].annotations[1].label, 3u);
  EXPECT_TRUE(m.rows[1].annotations.empty());
}

TEST(Manifest, UnknownLabelNamesTheRow) {
  std::istringstream in(kHeader + "a.eegt,256,Cz,0:1:ABSZ,P,E1\nb.eegt,256,Cz,0:1:XYZ,P,E2\n");
  const auto msg = error_of<SchemaError>([&] { parse_manifest(in, tuh_schema()); });
  EXPECT_TRUE(contains(msg, "schema error")) << msg;
  EXPECT_TRUE(contains(msg, "row 3")) << msg;
  EXPECT_TRUE(contains(msg, "XYZ")) << msg;
}

TEST(Manifest, DuplicateEventAndBadHeader) {
  std::istringstream dup(kHeader + "a,256,Cz,,P,E1\nb,256,Cz,,P,E1\n");
  EXPECT_THROW(parse_manifest(dup, tuh_schema()), SchemaError);
  std::istringstream bad("file,rate\n");
  EXPECT_THROW(parse_manifest(bad, tuh_schema()), FormatError);
}

TEST(Manifest, WriteThenLoadRoundTrips) {
  const auto dir = scratch_dir("manifest");
  CorpusManifest m{epilepsiae_schema(), dir, {}};
  m.rows.push_back({"x, y.eegt", 512.0, {"Fp1", "O2"}, {{0.1, 2.5, 2}, {3, 4, 0}}, "P\"1", "E,1"});
  m.rows.push_back({"z.eegt", 250.0, {"Cz"}, {}, "P2", "E2"});
  write_manifest(dir / "m.csv", m);
  const auto back = load_manifest(dir / "m.csv", epilepsiae_schema());
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].file, "x, y.eegt");
  EXPECT_EQ(back.rows[0].patient_id, "P\"1");
  EXPECT_EQ(back.rows[0].event_id, "E,1");
  EXPECT_EQ(back.rows[0].annotations, m.rows[0].annotations);
  EXPECT_EQ(back.root, dir);
}

// --- synthetic corpus ---

TEST(Synth, SeedFixedIsByteIdentical) {
  SynthSpec spec{.classes = 3, .bands = {}, .events_per_class = 2, .event_duration = 2.0, .seed = 9};
  const auto a = scratch_dir("synth_a"), b = scratch_dir("synth_b");
  generate_synthetic(spec, a);
  generate_synthetic(spec, b);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a);
    EXPECT_EQ(read_bytes(e.path()), read_bytes(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 7u);
  spec.seed = 10;
  const auto c = scratch_dir("synth_c");
  generate_synthetic(spec, c);
  EXPECT_NE(read_bytes(a / "recordings/rec_00000.eegt"), read_bytes(c / "recordings/rec_00000.eegt"));
}

TEST(Synth, SummaryAndManifest) {
  SynthSpec spec{.classes = 4, .bands = {}, .events_per_class = 5, .event_duration = 4.0};
  const auto corpus = generate_synthetic(spec, scratch_dir("synth_summary"));
  ASSERT_EQ(corpus.summary.size(), 4u);
  for (const auto& s : corpus.summary) {
    EXPECT_EQ(s.events, 5u);
    EXPECT_NEAR(s.minutes, 20.0 / 60.0, 1e-12);
  }
  EXPECT_EQ(corpus.manifest.rows.size(), 20u);
  EXPECT_EQ(corpus.manifest.schema.name(), "synth4");
  const auto back = load_manifest(corpus.manifest.root / "manifest.csv", corpus.manifest.schema);
  EXPECT_EQ(back.rows.size(), 20u);
}

TEST(Synth, BandAtNyquistNamesTheClass) {
  SynthSpec spec{.classes = 2, .bands = {{10, 2, 1}, {124.5, 2, 1}}};
  const auto msg = error_of<ConfigError>([&] { validate(spec); });
  EXPECT_TRUE(contains(msg, "C1")) << msg;
  EXPECT_TRUE(contains(msg, "Nyquist")) << msg;
  spec.bands = {{10, 2, 1}};
  EXPECT_THROW(validate(spec), ConfigError);
  EXPECT_NO_THROW(validate(SynthSpec{}));
}

TEST(Synth, DefaultBandsAreDistinctAndBelowNyquist) {
  for (std::size_t k : {2u, 4u, 8u, 16u}) {
    const auto bands = default_bands(k);
    ASSERT_EQ(bands.size(), k);
    for (std::size_t i = 1; i < k; ++i) EXPECT_GT(bands[i].center - bands[i - 1].center, bands[i].bandwidth);
    EXPECT_LT(bands.back().center + bands.back().bandwidth / 2, 125.0);
  }
}

// --- dataset directory ---

Dataset small_dataset(std::size_t n) {
  Rng rng(4);
  Dataset ds;
  ds.schema = synthetic_schema(3);
  for (std::size_t i = 0; i < n; ++i) {
    ds.samples.push_back({random_tensor(kSampleShape, rng), i % 3, {"rec, " + std::to_string(i / 2), "E" + std::to_string(i), 0.5 * i}});
  }
  return ds;
}

TEST(DatasetDir, RoundTripIsBitIdentical) {
  const auto dir = scratch_dir("dataset");
  const auto ds = small_dataset(7);
  write_dataset(dir, ds);
  const auto back = read_dataset(dir);
  EXPECT_EQ(back.schema, ds.schema);
  ASSERT_EQ(back.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(back.samples[i].label, ds.samples[i].label);
    EXPECT_EQ(back.samples[i].provenance, ds.samples[i].provenance);
    EXPECT_EQ(std::memcmp(back.samples[i].features.raw(), ds.samples[i].features.raw(), 32 * 9 * 19 * 4), 0);
  }
}

TEST(DatasetDir, EmptyDatasetRoundTrips) {
  const auto dir = scratch_dir("dataset_empty");
  write_dataset(dir, small_dataset(0));
  EXPECT_FALSE(std::filesystem::exists(dir / "features.eegt"));
  EXPECT_EQ(read_dataset(dir).size(), 0u);
}

// --- checkpoints ---

ModelDims tiny_dims() { return {.cnn_filters1 = 2, .cnn_filters2 = 3, .lstm_hidden1 = 2, .feature_dim = 4}; }

TEST(Checkpoint, SaveLoadIsBitIdentical) {
  for (auto kind : kAllModelKinds) {
    const auto dir = scratch_dir(std::string("ckpt_") + std::string(to_string(kind)));
    const Model m(kind, 4, tiny_dims(), 17);
    save_checkpoint(dir, m, epilepsiae_schema());
    const auto back = load_checkpoint(dir);
    EXPECT_EQ(back.model.kind(), kind);
    EXPECT_EQ(back.model.dims(), tiny_dims());
    EXPECT_EQ(back.schema, epilepsiae_schema());
    const auto pa = m.parameters(), pb = back.model.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      EXPECT_EQ(pa[i]->id, pb[i]->id);
      EXPECT_EQ(encode_tensor(pa[i]->weights), encode_tensor(pb[i]->weights));
      EXPECT_EQ(encode_tensor(pa[i]->bias), encode_tensor(pb[i]->bias));
    }
  }
}

TEST(Checkpoint, TamperedDimsNameTheParameter) {
  const auto dir = scratch_dir("ckpt_tamper");
  save_checkpoint(dir, Model(ModelKind::cnn, 4, tiny_dims(), 3), epilepsiae_schema());
  write_tensor(dir / "cnn.conv2.weights.eegt", Tensor::zeros({3, 3, 2, 5}));
  const auto msg = error_of<CheckpointError>([&] { load_checkpoint(dir); });
  EXPECT_TRUE(contains(msg, "checkpoint error")) << msg;
  EXPECT_TRUE(contains(msg, "cnn.conv2")) << msg;

  // Header and files agree, but disagree with the model geometry.
  const auto dir2 = scratch_dir("ckpt_tamper2");
  save_checkpoint(dir2, Model(ModelKind::cnn, 4, tiny_dims(), 3), epilepsiae_schema());
  std::ifstream in(dir2 / "header.json");
  auto h = nlohmann::json::parse(in);
  in.close();
  const Shape bad{3, 3, 2, 7};
  for (auto& p : h["params"]) {
    if (p["id"] == "cnn.conv2") p["weights"] = bad;
  }
  std::ofstream(dir2 / "header.json") << h.dump();
  write_tensor(dir2 / "cnn.conv2.weights.eegt", Tensor::zeros(bad));
  const auto msg2 = error_of<CheckpointError>([&] { load_checkpoint(dir2); });
  EXPECT_TRUE(contains(msg2, "cnn.conv2")) << msg2;
}

TEST(Checkpoint, CorruptHeaderAndContainer) {
  const auto dir = scratch_dir("ckpt_corrupt");
  save_checkpoint(dir, Model(ModelKind::rnn, 4, tiny_dims(), 3), epilepsiae_schema());
  auto bytes = read_bytes(dir / "head.dense.bias.eegt");
  bytes[0] = 'Z';
  write_bytes(dir / "head.dense.bias.eegt", bytes);
  const auto msg = error_of<CheckpointError>([&] { load_checkpoint(dir); });
  EXPECT_TRUE(contains(msg, "head.dense")) << msg;
  EXPECT_TRUE(contains(msg, "bad magic")) << msg;
  std::ofstream(dir / "header.json") << "{\"format\": \"other\"}";
  EXPECT_THROW(load_checkpoint(dir), CheckpointError);
}

TEST(Checkpoint, ExtractorSubsetIntoHybridStreams) {
  const auto dir = scratch_dir("ckpt_extractor");
  const Model cnn(ModelKind::cnn, 4, tiny_dims(), 5);
  save_checkpoint(dir, cnn, epilepsiae_schema());
  Model hybrid(ModelKind::hybrid, 4, tiny_dims(), 6);
  load_extractor_checkpoint(hybrid, Stream::a, dir);
  EXPECT_TRUE(testing::bit_equal(hybrid.find_parameter("a.cnn.conv1")->weights, cnn.snapshot()[0].weights));
  const auto msg = error_of<CheckpointError>([&] { load_extractor_checkpoint(hybrid, Stream::b, dir); });
  EXPECT_TRUE(contains(msg, "rnn.lstm1")) << msg;
}

TEST(Checkpoint, SchemaSizeMismatchRejected) {
  EXPECT_THROW(save_checkpoint(scratch_dir("ckpt_k"), Model(ModelKind::cnn, 3, tiny_dims(), 1), tuh_schema()),
               CheckpointError);
}

}  // namespace
}  // namespace hybil
