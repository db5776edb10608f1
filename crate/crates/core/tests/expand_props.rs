use afeis_core::interpreter::{expand, Arg, CmdNode, Environment, Limits, Number};
use proptest::prelude::*;

// bodies made only of plain commands and nested loops
fn plain_body() -> impl Strategy<Value = Vec<CmdNode>> {
    let leaf = (prop::sample::select(vec!["FORWARD", "DOWN", "SNAPSHOT"]), 0u32..10).prop_map(|(n, a)| {
        let args = if n == "SNAPSHOT" {
            vec![]
        } else {
            vec![Arg::Literal(Number::new(a as f64))]
        };
        CmdNode::FnCall { name: n.into(), args }
    });
    let node = leaf.prop_recursive(3, 16, 4, |inner| {
        (0u32..4, prop::collection::vec(inner, 1..4)).prop_map(|(count, body)| CmdNode::Loop { count, body })
    });
    prop::collection::vec(node, 1..5)
}

proptest! {
    #[test]
    fn loop_length_multiplies(n in 0u32..20, body in plain_body()) {
        let limits = Limits::default();
        let inner = expand(&body, &mut Environment::default(), &limits).unwrap();
        let looped = expand(&[CmdNode::Loop { count: n, body: body.clone() }], &mut Environment::default(), &limits).unwrap();
        prop_assert_eq!(looped.len(), n as usize * inner.len());
        for chunk in looped.chunks(inner.len().max(1)) {
            prop_assert_eq!(chunk, &inner[..]);
        }
    }
}
