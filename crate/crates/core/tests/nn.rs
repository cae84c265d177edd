mod oracles;
mod suites;

#[test]
fn attention_rows_sum_to_one() {
    suites::attention_rows_sum_to_one().unwrap();
}

#[test]
fn singleton_neighbourhood_has_unit_weight() {
    suites::singleton_neighbourhood().unwrap();
}

#[test]
fn aggregation_ignores_neighbour_order() {
    suites::aggregation_ignores_order().unwrap();
}

#[test]
fn in_band_sample_contributes_ratio_times_advantage() {
    suites::in_band_surrogate().unwrap();
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    suites::zero_learning_rate_keeps_parameters().unwrap();
}

#[test]
fn training_is_reproducible() {
    suites::training_is_reproducible().unwrap();
}
