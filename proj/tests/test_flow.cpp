int eqot_placeholder_test_flow = 0;
