#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "ftlab/model.hpp"
#include "ftlab/util.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

namespace {

TransformerConfig tiny_config(unsigned seed = 0) {
    TransformerConfig cfg;
    cfg.context_length = 16;
    cfg.model_dim = 16;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.mlp_hidden = 32;
    cfg.seed = seed;
    return cfg;
}

std::vector<int> random_prompt(std::mt19937& rng, int len) {
    std::uniform_int_distribution<int> pick(3, 258);
    std::vector<int> ids(len);
    for (int& id : ids) id = pick(rng);
    return ids;
}

void randomize(Tensor t, std::mt19937& rng) {
    std::normal_distribution<float> dist(0.0f, 0.3f);
    for (float& v : t.values()) v = dist(rng);
}

}  // namespace

TEST_CASE("attachment shape and count") {
    TransformerWeights w = init_model(tiny_config(1));
    AdapterSet set = attach_adapters(w, 4, 8.0f, {LoraTarget::kQuery, LoraTarget::kValue}, 1);
    CHECK(set.adapters.size() == 4);  // 2 layers x {query, value}
    std::size_t trainable = 0;
    for (Tensor& t : trainable_parameters(set)) trainable += t.size();
    CHECK(trainable == std::size_t(4) * 2 * 4 * 16);
    const LoraAdapter* a = set.find(1, LoraTarget::kValue);
    REQUIRE(a != nullptr);
    CHECK(a->a.shape() == std::vector<int>{4, 16});
    CHECK(a->b.shape() == std::vector<int>{16, 4});
    for (float v : a->b.values()) CHECK(v == 0.0f);
    CHECK(a->scale() == doctest::Approx(2.0));
    CHECK(set.find(0, LoraTarget::kQuery) != nullptr);
    CHECK(set.find(5, LoraTarget::kQuery) == nullptr);
}

TEST_CASE("fresh adapters leave logits bit identical") {
    TransformerWeights w = init_model(tiny_config(2));
    AdapterSet set = attach_adapters(w, 4, 8.0f, {LoraTarget::kQuery, LoraTarget::kValue}, 7);
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto ids = random_prompt(rng, 2 + trial % 10);
        Tensor base = forward(w, ids);
        Tensor adapted = forward(w, ids, &set);
        REQUIRE(base.size() == adapted.size());
        CHECK(std::memcmp(base.values().data(), adapted.values().data(),
                          base.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("dense delta reproduces the low rank product") {
    TransformerWeights w = init_model(tiny_config(3));
    AdapterSet set = attach_adapters(w, 4, 6.0f, {LoraTarget::kQuery}, 11);
    LoraAdapter& ad = set.adapters[0];
    std::mt19937 rng(5);
    randomize(ad.b, rng);

    Tensor x = Tensor::randn({5, 16}, 1.0f, rng);
    Tensor via_lowrank = adapter_delta(ad, x);
    Tensor dense = adapter_dense_delta(ad);
    Tensor via_dense = matmul(x, dense);
    for (std::size_t i = 0; i < via_lowrank.size(); ++i)
        CHECK(via_lowrank.values()[i] ==
              doctest::Approx(via_dense.values()[i]).epsilon(1e-4));

    // element oracle: D[i][j] = scale * sum_k A[k][i] * B[j][k]
    float scale = ad.scale();
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            float want = 0.0f;
            for (int k = 0; k < 4; ++k)
                want += ad.a.values()[k * 16 + i] * ad.b.values()[j * 4 + k];
            CHECK(dense.values()[i * 16 + j] == doctest::Approx(scale * want).epsilon(1e-5));
        }

    // and its rank is bounded by the adapter rank
    Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        dense.values().data(), 16, 16);
    Eigen::JacobiSVD<Eigen::MatrixXf> svd(m);
    for (int i = 4; i < 16; ++i) CHECK(svd.singularValues()(i) <= 1e-5f);
}

TEST_CASE("merge matches attached adapters") {
    TransformerWeights w = init_model(tiny_config(4));
    AdapterSet set = attach_adapters(w, 4, 8.0f, {LoraTarget::kQuery, LoraTarget::kValue}, 13);
    std::mt19937 rng(17);
    for (LoraAdapter& ad : set.adapters) randomize(ad.b, rng);

    TransformerWeights merged = merge(w, set);
    for (int trial = 0; trial < 10; ++trial) {
        auto ids = random_prompt(rng, 3 + trial);
        Tensor attached = forward(w, ids, &set);
        Tensor folded = forward(merged, ids);
        for (std::size_t i = 0; i < attached.size(); ++i)
            CHECK(std::fabs(attached.values()[i] - folded.values()[i]) <= 1e-4f);
    }
    // the original base was never touched
    TransformerWeights fresh = init_model(tiny_config(4));
    auto pw = w.named_parameters();
    auto pf = fresh.named_parameters();
    for (std::size_t i = 0; i < pw.size(); ++i)
        CHECK(std::memcmp(pw[i].second.values().data(), pf[i].second.values().data(),
                          pw[i].second.size() * sizeof(float)) == 0);
}

TEST_CASE("dropout only fires during training") {
    TransformerWeights w = init_model(tiny_config(5));
    AdapterSet set =
        attach_adapters(w, 4, 8.0f, {LoraTarget::kQuery}, 19, 0.5f);
    std::mt19937 rng(23);
    randomize(set.adapters[0].b, rng);
    Tensor x = Tensor::randn({4, 16}, 1.0f, rng);

    Tensor eval1 = adapter_delta(set.adapters[0], x);
    Tensor eval2 = adapter_delta(set.adapters[0], x);
    CHECK(std::memcmp(eval1.values().data(), eval2.values().data(),
                      eval1.size() * sizeof(float)) == 0);

    AdapterForwardOptions train_opts;
    train_opts.training = true;
    train_opts.rng = &rng;
    Tensor t1 = adapter_delta(set.adapters[0], x, train_opts);
    Tensor t2 = adapter_delta(set.adapters[0], x, train_opts);
    bool differs = false;
    for (std::size_t i = 0; i < t1.size(); ++i)
        if (t1.values()[i] != t2.values()[i]) differs = true;
    CHECK(differs);
}

TEST_CASE("invalid attachment arguments") {
    TransformerWeights w = init_model(tiny_config(6));
    CHECK_THROWS_AS(attach_adapters(w, 0, 8.0f, {LoraTarget::kQuery}, 1), ContractError);
    CHECK_THROWS_AS(attach_adapters(w, 32, 8.0f, {LoraTarget::kQuery}, 1), ContractError);
    CHECK_THROWS_AS(attach_adapters(w, 4, 8.0f, {}, 1), ContractError);
}

TEST_CASE("adapter checkpoint round trip with extra entries") {
    TransformerWeights w = init_model(tiny_config(7));
    AdapterSet set = attach_adapters(w, 4, 8.0f, {LoraTarget::kQuery, LoraTarget::kValue}, 29);
    std::mt19937 rng(31);
    for (LoraAdapter& ad : set.adapters) randomize(ad.b, rng);
    Tensor head = Tensor::randn({16, 1}, 0.1f, rng);

    std::string path = (fs::temp_directory_path() /
                        ("ftlab-lora-" + std::to_string(::getpid()) + ".ftla"))
                           .string();
    save_adapters(set, path, {{"head.weight", head}});
    std::vector<std::pair<std::string, Tensor>> extra;
    AdapterSet back = load_adapters(path, &extra);
    fs::remove(path);

    REQUIRE(back.adapters.size() == set.adapters.size());
    for (std::size_t i = 0; i < set.adapters.size(); ++i) {
        CHECK(back.adapters[i].layer == set.adapters[i].layer);
        CHECK(back.adapters[i].target == set.adapters[i].target);
        CHECK(back.adapters[i].rank == set.adapters[i].rank);
        CHECK(back.adapters[i].alpha == set.adapters[i].alpha);
        CHECK(std::memcmp(back.adapters[i].a.values().data(),
                          set.adapters[i].a.values().data(),
                          set.adapters[i].a.size() * sizeof(float)) == 0);
        CHECK(std::memcmp(back.adapters[i].b.values().data(),
                          set.adapters[i].b.values().data(),
                          set.adapters[i].b.size() * sizeof(float)) == 0);
    }
    REQUIRE(extra.size() == 1);
    CHECK(extra[0].first == "head.weight");
    CHECK(std::memcmp(extra[0].second.values().data(), head.values().data(),
                      head.size() * sizeof(float)) == 0);
}
