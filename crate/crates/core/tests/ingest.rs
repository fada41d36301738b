use motifscope::ingest::{
    attach_labels, filter_spam, group_methods, group_transactions, parse_method_labels,
    parse_transfers, AccountRegistry, AccountType, MethodGroup, MethodMapping, RejectReason,
    TokenRegistry,
};
use motifscope::store::{Store, TRANSACTIONS_FILE};

const HEADER: &str = "tx_hash,ego,from,to,token_contract,token_symbol,amount,block_number\n";
const EGO: &str = "0x1111111111111111111111111111111111111111";
const POOL: &str = "0x2222222222222222222222222222222222222222";
const USDC: &str = "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48";
const JUNK: &str = "0x9999999999999999999999999999999999999999";

fn csv(rows: &[String]) -> String {
    let mut s = HEADER.to_string();
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn tokens() -> TokenRegistry {
    let json = format!(
        r#"[{{"contract":"{USDC}","symbol":"USDC","category":"Stablecoin"}},
            {{"contract":"{JUNK}","symbol":"FREE","category":"Other","is_spam":true}},
            {{"contract":"","symbol":"ETH","category":"Cryptocurrency"}}]"#
    );
    TokenRegistry::from_json(json.as_bytes()).unwrap()
}

#[test]
fn bad_rows_are_counted_not_fatal() {
    let input = csv(&[
        format!("0xa,{EGO},{EGO},{POOL},{USDC},USDC,10.5,100"),
        format!("0xb,{EGO},{EGO},{EGO},{USDC},USDC,1,100"),
        format!("0xc,{EGO},{EGO},{POOL},{USDC},USDC,-1,100"),
        format!("0xd,{EGO},{EGO},{POOL},{USDC},USDC,abc,100"),
        format!("0xe,{EGO},{EGO},{POOL},{USDC},USDC,1,block"),
        format!(",{EGO},{EGO},{POOL},{USDC},USDC,1,100"),
        "0xf,too,few".to_string(),
    ]);
    let load = parse_transfers(input.as_bytes()).unwrap();
    assert_eq!(load.report.accepted, 1);
    assert_eq!(load.report.rejected, 6);
    for reason in [
        RejectReason::SelfTransfer,
        RejectReason::NegativeAmount,
        RejectReason::InvalidAmount,
        RejectReason::InvalidBlockNumber,
        RejectReason::MissingTxHash,
        RejectReason::MalformedRow,
    ] {
        assert_eq!(load.report.by_reason.get(&reason), Some(&1), "{reason:?}");
    }
}

#[test]
fn missing_column_is_an_error() {
    let input = "tx_hash,ego,from,to\n0xa,b,c,d\n";
    assert!(parse_transfers(input.as_bytes()).is_err());
}

#[test]
fn addresses_are_normalized() {
    let upper = EGO.to_uppercase().replace("0X", "0x");
    let input = csv(&[format!("0xA,{upper},{upper},{POOL},{USDC},USDC,1,1")]);
    let load = parse_transfers(input.as_bytes()).unwrap();
    assert_eq!(load.transfers[0].ego_account, EGO);
    assert_eq!(load.transfers[0].tx_hash, "0xa");
}

#[test]
fn spam_filter_labels_and_store_round_trip() {
    let input = csv(&[
        format!("0xa,{EGO},{EGO},{POOL},{USDC},USDC,1,1"),
        format!("0xa,{EGO},{POOL},{EGO},,ETH,1,1"),
        format!("0xb,{EGO},{POOL},{EGO},{JUNK},FREE,1,2"),
        format!("0xc,{EGO},{EGO},0x0000000000000000000000000000000000000000,{USDC},USDC,1,3"),
    ]);
    let tokens = tokens();
    let txs = group_transactions(parse_transfers(input.as_bytes()).unwrap().transfers);
    assert_eq!(txs.len(), 3);
    let mut txs = filter_spam(txs, &tokens);
    let hashes: Vec<&str> = txs.iter().map(|t| t.tx_hash.as_str()).collect();
    assert_eq!(hashes, ["0xa", "0xc"]);

    let labels = parse_method_labels(
        "tx_hash,raw_method\n0xa,Swap Exact Tokens For Tokens\n0xc,burn\n".as_bytes(),
    )
    .unwrap();
    let labels = group_methods(labels.labels, &MethodMapping::builtin());
    attach_labels(&mut txs, &labels);
    assert_eq!(txs[0].method_group, Some(MethodGroup::Swap));
    assert_eq!(txs[1].method_group, None);
    assert_eq!(txs[1].raw_method.as_deref(), Some("burn"));

    let mut accounts = AccountRegistry::new();
    accounts.declare(POOL, AccountType::Contract).unwrap();
    accounts.declare_egos([EGO]);
    let dir = tempfile::tempdir().unwrap();
    let store = Store {
        transactions: txs,
        accounts,
        tokens,
    };
    store.write(dir.path()).unwrap();
    assert!(dir.path().join(TRANSACTIONS_FILE).exists());
    let back = Store::read(dir.path()).unwrap();
    assert_eq!(back.transactions, store.transactions);
    assert_eq!(back.accounts.counterpart_type(POOL), AccountType::Contract);
    assert_eq!(
        back.accounts
            .account_type("0x0000000000000000000000000000000000000000"),
        AccountType::Null
    );
}

#[test]
fn conflicting_declarations_are_rejected() {
    let mut accounts = AccountRegistry::new();
    accounts.declare(POOL, AccountType::Contract).unwrap();
    assert!(accounts.declare(POOL, AccountType::Address).is_err());
}
