#include <gtest/gtest.h>

#include "qgbsde/errors.hpp"
#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/model.hpp"
#include "qgbsde/partition.hpp"

using namespace qgbsde;

TEST(Partition, Uniform) {
    const Partition p = Partition::uniform(2.0, 8);
    EXPECT_EQ(p.steps(), 8u);
    EXPECT_DOUBLE_EQ(p.horizon(), 2.0);
    EXPECT_DOUBLE_EQ(p.mesh(), 0.25);
    EXPECT_DOUBLE_EQ(p.time(0), 0.0);
    EXPECT_DOUBLE_EQ(p.time(8), 2.0);
}

TEST(Partition, NonUniformMesh) {
    const Partition p({0.0, 0.1, 0.5, 0.6, 1.0});
    EXPECT_DOUBLE_EQ(p.mesh(), 0.4);
}

TEST(Partition, RejectsInvalidTimes) {
    EXPECT_THROW(Partition({0.0}), InvalidPartition);
    EXPECT_THROW(Partition({0.1, 0.5, 1.0}), InvalidPartition);
    EXPECT_THROW(Partition({0.0, 0.5, 0.5, 1.0}), InvalidPartition);
    EXPECT_THROW(Partition({0.0, 0.6, 0.4, 1.0}), InvalidPartition);
    EXPECT_THROW(Partition::uniform(1.0, 0), InvalidPartition);
    EXPECT_THROW(Partition::uniform(-1.0, 4), InvalidPartition);
}

TEST(Partition, RefinementEmbeds) {
    const Partition coarse = Partition::uniform(1.0, 8);
    const Partition fine = coarse.refined(4);
    EXPECT_EQ(fine.steps(), 32u);
    const auto idx = coarse.embedding_in(fine);
    ASSERT_EQ(idx.size(), 9u);
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], 4 * i);
}

TEST(Partition, EmbeddingMismatch) {
    EXPECT_THROW(Partition::uniform(1.0, 3).embedding_in(Partition::uniform(1.0, 8)), GridMismatch);
    EXPECT_THROW(Partition::uniform(1.0, 4).embedding_in(Partition::uniform(2.0, 8)), GridMismatch);
}

TEST(Model, CatalogModelsValidate) {
    for (const auto& name : catalog::preset_names()) {
        const ModelSpec m = catalog::build_model(catalog::preset(name));
        EXPECT_NO_THROW(validate_model(m)) << name;
    }
}

TEST(Model, GrowthCertificateSpotCheck) {
    ModelSpec m = catalog::canonical_quadratic(1.0);
    m.growth_M = 0.1;  // |z|^2 / 2 is not bounded by 0.1 (1 + |z|^2)
    EXPECT_THROW(validate_model(m), InvalidModel);
}

TEST(Model, MissingGradientsAtHigherLevel) {
    ModelSpec m = catalog::brownian_identity();
    m.driver_grad_z = nullptr;
    EXPECT_THROW(validate_model(m), InvalidModel);
    m.assumption_level = AssumptionLevel::HX0Y0;
    EXPECT_NO_THROW(validate_model(m));
}

TEST(Model, DimensionChecks) {
    ModelSpec m = catalog::brownian_identity();
    m.initial_state = {0.0, 1.0};
    EXPECT_THROW(validate_model(m), InvalidModel);
    m = catalog::brownian_identity();
    m.horizon = 0.0;
    EXPECT_THROW(validate_model(m), InvalidModel);
}
