#include <gtest/gtest.h>

#include <set>

#include "pjudge/persona.h"
#include "pjudge/random.h"

namespace pjudge {
namespace {

Persona full_opinionqa() {
  return make_persona(DatasetTag::OpinionQA, {{"Age", "45-50"},
                                              {"Sex", "Female"},
                                              {"Living Country", "United States"},
                                              {"Education", "College graduate"},
                                              {"Citizenship", "Yes"},
                                              {"Marital Status", "Married"},
                                              {"Religion", "Protestant"},
                                              {"Party", "Independent"},
                                              {"Ideology", "Moderate"},
                                              {"Income", "$50-75k"}});
}

TEST(RenderPersona, Examples) {
  const auto p = make_persona(DatasetTag::PRISM, {{"Age", "45-50"}, {"Sex", "Female"}});
  EXPECT_EQ(render_persona(p), "Age: 45-50\nSex: Female");
  EXPECT_EQ(render_persona(Persona{DatasetTag::PRISM, {}}), "No profile information available.");
}

TEST(RenderPersona, FullOpinionQaHasTenLines) {
  const auto text = render_persona(full_opinionqa());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
  EXPECT_EQ(persona_lines(full_opinionqa()).size(), 10u);
}

TEST(MakePersona, SchemaOrderAndValidation) {
  const auto p = make_persona(DatasetTag::PRISM, {{"Religion", "None"}, {"Age", "30"}, {"Sex", ""}});
  ASSERT_EQ(p.attributes.size(), 2u);  // empty value dropped
  EXPECT_EQ(p.attributes[0].name, "Age");
  EXPECT_EQ(p.attributes[1].name, "Religion");
  EXPECT_THROW(make_persona(DatasetTag::PRISM, {{"Shoe Size", "9"}}), DataError);
  EXPECT_THROW(make_persona(DatasetTag::PRISM, {{"Age", "1"}, {"Age", "2"}}), DataError);
  EXPECT_THROW(make_persona(DatasetTag::PRISM, {{"Age", "1\n2"}}), DataError);
}

TEST(SelectFeatures, ImportantThreeOnOpinionQa) {
  auto p = full_opinionqa();
  p.attributes.push_back({"Race", "Asian"});
  const auto s = select_features(p, FeatureSelection::important_three());
  std::vector<std::string> names;
  for (const auto& a : s.attributes) names.push_back(a.name);
  EXPECT_EQ(names, (std::vector<std::string>{"Living Country", "Education", "Race"}));
}

TEST(SelectFeatures, NoPersonaAndLeastOne) {
  const auto p = full_opinionqa();
  EXPECT_TRUE(select_features(p, FeatureSelection::no_persona()).attributes.empty());
  const auto least = select_features(p, FeatureSelection::least_one());
  ASSERT_EQ(least.attributes.size(), 1u);
  EXPECT_EQ(least.attributes[0].name, "Religion");
}

TEST(SelectFeatures, CustomNameOutsideSchemaIsNamed) {
  const auto p = make_persona(DatasetTag::PRISM, {{"Age", "30"}});
  try {
    select_features(p, FeatureSelection::custom_names({"Shoe Size"}));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("Shoe Size"), std::string::npos);
  }
}

TEST(SelectFeatures, LeastOneUndefinedWithoutReligion) {
  EXPECT_THROW(resolve_selection(DatasetTag::EC, FeatureSelection::least_one()), DataError);
}

TEST(Selection, LabelsRoundTrip) {
  for (const auto& s : {FeatureSelection::all(), FeatureSelection::important_three(),
                        FeatureSelection::least_one(), FeatureSelection::no_persona(),
                        FeatureSelection::custom_names({"Age", "Living Country"})}) {
    EXPECT_EQ(parse_selection(selection_label(s)), s);
  }
  EXPECT_EQ(parse_selection("custom:Age,Sex"), FeatureSelection::custom_names({"Age", "Sex"}));
  EXPECT_EQ(parse_selection("none"), FeatureSelection::no_persona());
  EXPECT_THROW(parse_selection("most"), UsageError);
}

// Random PRISM personas: each schema attribute present with probability 1/2,
// values drawn from a small alphabet so collisions between personas happen.
Persona random_persona(Rng& rng) {
  std::vector<Attribute> attrs;
  for (auto name : schema_for(DatasetTag::PRISM)) {
    if (rng.bernoulli(0.5)) {
      attrs.push_back({std::string(name), "v" + std::to_string(rng.below(3))});
    }
  }
  return make_persona(DatasetTag::PRISM, std::move(attrs));
}

TEST(PersonaProperties, SelectionIsIdempotent) {
  Rng rng(11);
  const FeatureSelection selections[] = {
      FeatureSelection::all(), FeatureSelection::important_three(),
      FeatureSelection::least_one(), FeatureSelection::no_persona(),
      FeatureSelection::custom_names({"Sex", "Religion"})};
  for (int i = 0; i < 300; ++i) {
    const auto p = random_persona(rng);
    for (const auto& s : selections) {
      const auto once = select_features(p, s);
      EXPECT_EQ(select_features(once, s), once);
    }
  }
}

TEST(PersonaProperties, RenderAllContainsEveryValueOnce) {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    auto p = random_persona(rng);
    // Unique values so substring counting is meaningful.
    for (std::size_t k = 0; k < p.attributes.size(); ++k) {
      p.attributes[k].value = "val" + std::to_string(i) + "x" + std::to_string(k) + "z";
    }
    const auto text = render_persona(select_features(p, FeatureSelection::all()));
    for (const auto& a : p.attributes) {
      std::size_t count = 0;
      for (auto pos = text.find(a.value); pos != std::string::npos;
           pos = text.find(a.value, pos + 1)) {
        ++count;
      }
      EXPECT_EQ(count, 1u) << a.value;
    }
  }
}

TEST(PersonaProperties, RenderingIsInjective) {
  Rng rng(13);
  std::map<std::string, Persona> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_persona(rng);
    const auto text = render_persona(p);
    const auto [it, inserted] = seen.emplace(text, p);
    if (!inserted) EXPECT_EQ(it->second, p) << text;
  }
}

}  // namespace
}  // namespace pjudge
