#include <gtest/gtest.h>

#include "mpe/learner.hpp"

using namespace mpe;

namespace {

std::vector<LabeledExample> separable(std::size_t per_class, RngStream& r) {
    std::vector<LabeledExample> ex;
    for (std::size_t i = 0; i < per_class; ++i) {
        ex.push_back({{-2.0 + 0.3 * r.normal()}, 0, std::nullopt});
        ex.push_back({{2.0 + 0.3 * r.normal()}, 1, std::nullopt});
    }
    return ex;
}

std::vector<LabeledExample> random_batch(RngStream& r, std::size_t n, std::size_t d) {
    std::vector<LabeledExample> ex(n);
    for (auto& e : ex) {
        e.x.resize(d);
        for (auto& v : e.x) v = r.normal();
        e.y = r.uniform() < 0.5;
    }
    return ex;
}

}  // namespace

TEST(Learner, SeparableData) {
    RngStream r(1, 1);
    auto ex = separable(200, r);
    TrainConfig cfg;
    auto m = train(ex, cfg, r);
    auto test = separable(200, r);
    int correct = 0;
    for (const auto& e : test) correct += (predict_proba(m, e.x) > 0.5) == (e.y == 1);
    EXPECT_GE(correct / 400.0, 0.95);
    EXPECT_GE(predict_proba(m, 2.0), 0.9);
    EXPECT_LE(predict_proba(m, -2.0), 0.1);
}

TEST(Learner, NoiseLabelsGiveBaseRate) {
    RngStream r(2, 2);
    std::vector<LabeledExample> ex;
    int pos = 0;
    for (int i = 0; i < 2000; ++i) {
        int y = r.uniform() < 0.3;
        pos += y;
        ex.push_back({{r.normal()}, y, std::nullopt});
    }
    auto m = train(ex, TrainConfig{}, r);
    double mean = 0.0;
    for (const auto& e : ex) mean += predict_proba(m, e.x);
    EXPECT_NEAR(mean / 2000.0, pos / 2000.0, 0.05);
}

TEST(Learner, FullBatchLossNonIncreasing) {
    RngStream r(3, 3);
    auto ex = separable(100, r);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.1;
    auto m = train(ex, cfg, r);
    ASSERT_EQ(m.training_loss.size(), 6u);
    for (std::size_t i = 1; i < m.training_loss.size(); ++i) EXPECT_LE(m.training_loss[i], m.training_loss[i - 1]);
}

TEST(Learner, DefaultTrainingLossNonIncreasing) {
    RngStream r(3, 4);
    auto ex = random_batch(r, 500, 2);
    for (auto& e : ex) e.y = e.x[0] + 0.5 * r.normal() > 0.0;
    auto m = train(ex, TrainConfig{}, r);
    for (std::size_t i = 1; i < m.training_loss.size(); ++i)
        ASSERT_LE(m.training_loss[i], m.training_loss[i - 1] + 1e-15) << "epoch " << i;
}

TEST(Learner, SingleClassRejected) {
    RngStream r(4, 4);
    std::vector<LabeledExample> ex{{{1.0}, 1, std::nullopt}, {{2.0}, 1, std::nullopt}};
    EXPECT_THROW(train(ex, TrainConfig{}, r), DegenerateDataError);
}

TEST(Learner, DeterministicGivenSeed) {
    RngStream r(5, 5);
    auto ex = separable(50, r);
    TrainConfig cfg;
    cfg.architecture = Architecture::mlp;
    cfg.optimizer = Optimizer::adam;
    cfg.learning_rate = 0.01;
    cfg.epochs = 50;
    cfg.batch_size = 16;
    cfg.seed = 99;
    EXPECT_EQ(train(ex, cfg).params, train(ex, cfg).params);
}

TEST(PredictProba, ZeroWeightsGiveHalf) {
    auto m = ClassifierModel::zeros(Architecture::logistic_poly, 2, 1);
    std::vector<double> x{3.0, -7.0};
    EXPECT_EQ(predict_proba(m, x), 0.5);
}

TEST(PredictProba, MonotoneInLinearScore) {
    auto m = ClassifierModel::zeros(Architecture::logistic_poly, 2, 1);
    m.params = {1.5, -0.5, 0.2};
    std::vector<double> x{1.0, 0.0}, xp{0.0, 1.0};
    EXPECT_GT(predict_proba(m, x), predict_proba(m, xp));
}

TEST(PredictProba, StrictlyInsideUnitInterval) {
    auto m = ClassifierModel::zeros(Architecture::logistic_poly, 1, 1);
    m.params = {1000.0, 0.0};
    EXPECT_LT(predict_proba(m, 5.0), 1.0);
    EXPECT_GT(predict_proba(m, -5.0), 0.0);
    EXPECT_THROW(predict_proba(m, std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST(GradientCheck, RandomModelsBothArchitectures) {
    RngStream r(6, 6);
    for (int t = 0; t < 20; ++t) {
        std::size_t d = 1 + r.below(3);
        auto arch = t % 2 ? Architecture::mlp : Architecture::logistic_poly;
        auto m = ClassifierModel::zeros(arch, d, 1 + static_cast<int>(r.below(3)), 4 + static_cast<int>(r.below(8)));
        m.l2 = 0.01 * r.uniform();
        randomize_params(m, r, 0.5);
        EXPECT_LE(gradient_check(m, random_batch(r, 30, d)), 1e-4);
    }
}

TEST(GradientCheck, ZeroModelSymmetricBatchHasZeroBiasGradient) {
    auto m = ClassifierModel::zeros(Architecture::logistic_poly, 1, 1);
    std::vector<LabeledExample> batch{{{1.0}, 1, {}}, {{-1.0}, 0, {}}, {{-1.0}, 1, {}}, {{1.0}, 0, {}}};
    auto lg = loss_and_gradient(m, batch);
    EXPECT_NEAR(lg.gradient.back(), 0.0, 1e-8);
}

TEST(GradientCheck, DuplicatedBatchSameGradient) {
    RngStream r(7, 7);
    auto m = ClassifierModel::zeros(Architecture::mlp, 2, 1, 5);
    randomize_params(m, r);
    auto batch = random_batch(r, 20, 2);
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    auto a = loss_and_gradient(m, batch), b = loss_and_gradient(m, doubled);
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    for (std::size_t i = 0; i < a.gradient.size(); ++i) EXPECT_NEAR(a.gradient[i], b.gradient[i], 1e-12);
}

TEST(Learner, CalibrationOnLogisticData) {
    RngStream r(8, 8);
    std::vector<LabeledExample> ex;
    std::vector<double> truth;
    for (int i = 0; i < 10000; ++i) {
        double x0 = r.normal(), x1 = r.normal();
        double p = sigmoid(1.2 * x0 - 0.8 * x1 + 0.3);
        truth.push_back(p);
        ex.push_back({{x0, x1}, r.uniform() < p, std::nullopt});
    }
    auto m = train(ex, TrainConfig{}, r);
    double mad = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i) mad += std::abs(predict_proba(m, ex[i].x) - truth[i]);
    EXPECT_LE(mad / ex.size(), 0.05);
}

TEST(Learner, MlpFitsNonlinearBoundary) {
    RngStream r(9, 9);
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 1000; ++i) {
        double x = 3.0 * r.normal();
        ex.push_back({{x}, std::abs(x) < 2.0, std::nullopt});
    }
    TrainConfig cfg;
    cfg.architecture = Architecture::mlp;
    cfg.optimizer = Optimizer::adam;
    cfg.learning_rate = 0.05;
    cfg.epochs = 1500;
    auto m = train(ex, cfg, r);
    EXPECT_GT(predict_proba(m, 0.0), 0.8);
    EXPECT_LT(predict_proba(m, 5.0), 0.2);
    EXPECT_LT(predict_proba(m, -5.0), 0.2);
}
