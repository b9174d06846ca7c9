// Runs every example's `main` so the examples cannot rot.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(reconstruct_remainders);
example!(noiseless_estimate);
example!(snr_threshold);
example!(configure_ranges);
example!(mse_sweep);
example!(iq_roundtrip);
