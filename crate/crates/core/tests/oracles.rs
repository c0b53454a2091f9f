mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn state_machine_checker_matches_closure(sm in state_machine()) {
        check_state_machine_oracle(&sm)?;
    }

    #[test]
    fn trace_checker_matches_enumeration(g in trace_graph()) {
        check_trace_oracle(&g)?;
    }
}
