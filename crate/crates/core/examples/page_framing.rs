//! Splits a subframe's HKROOT and MACK sections into the 15 OSNMA page fields
//! and puts them back together.

use osnma_lab::bitgrid::{format_page_vectors, from_bytes, GstTime, SubframePayload};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gst = GstTime::new(1200, 3630)?;
    println!("GST {}:{} subframe {} packed {:08X}", gst.week(), gst.tow(), gst.subframe_index(), gst.packed());

    let hkroot: Vec<u8> = (0..15).collect();
    let mack: Vec<u8> = (0..60).map(|i| i * 3).collect();
    let payload = SubframePayload::from_bits(&from_bytes(&hkroot), &from_bytes(&mack))?;

    let pages = payload.disassemble();
    for (i, page) in pages.iter().enumerate().take(3) {
        let (hk, mk) = page.split();
        println!("page {i:2}: field {:010X} hkroot {hk:02X} mack {mk:08X}", page.to_u64());
    }

    let back = SubframePayload::assemble(&pages)?;
    assert_eq!(back, payload);
    print!("{}", format_page_vectors(&[pages]));
    Ok(())
}
