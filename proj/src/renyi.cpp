#include "hetlab/renyi.hpp"

#include <array>
#include <utility>

namespace hetlab {

namespace {

constexpr std::array<std::pair<Table1Index, const char*>, 10> kNames{{
    {Table1Index::richness, "richness"},
    {Table1Index::perplexity, "perplexity"},
    {Table1Index::inverse_simpson, "inverse_simpson"},
    {Table1Index::berger_parker, "berger_parker"},
    {Table1Index::renyi_entropy, "renyi_entropy"},
    {Table1Index::shannon_entropy, "shannon_entropy"},
    {Table1Index::tsallis_entropy, "tsallis_entropy"},
    {Table1Index::simpson_concentration, "simpson_concentration"},
    {Table1Index::gini_simpson, "gini_simpson"},
    {Table1Index::generalized_entropy_index, "generalized_entropy_index"},
}};

} // namespace

Table1Index parse_table1_index(const std::string& name) {
    for (const auto& [index, label] : kNames)
        if (name == label)
            return index;
    throw UsageError("unknown index '" + name + "'");
}

std::string to_string(Table1Index index) {
    for (const auto& [value, label] : kNames)
        if (value == index)
            return label;
    return "unknown";
}

} // namespace hetlab
